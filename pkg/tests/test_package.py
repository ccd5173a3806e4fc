import radstein


def test_public_names_resolve():
    for name in radstein.__all__:
        assert getattr(radstein, name) is not None


def test_version_metadata():
    import importlib.metadata

    try:
        version = importlib.metadata.version("radstein")
    except importlib.metadata.PackageNotFoundError:
        return  # running from a source tree without installation
    assert version
