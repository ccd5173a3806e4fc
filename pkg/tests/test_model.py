import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radstein.errors import (
    EmptyModel,
    EnumerationCapExceeded,
    IndexOutOfRange,
    LengthMismatch,
    NonIntegerValue,
    OutOfRangeProbability,
)
from radstein.model import (
    FunctionalTable,
    Outcome,
    build_model,
    distribution,
    expectation,
    flip,
    outcome_weight,
    standardized_value,
    variance,
)

import oracles

probabilities = st.floats(min_value=0.01, max_value=0.99, allow_nan=False)
prob_vectors = st.lists(probabilities, min_size=1, max_size=10)


class TestBuildModel:
    def test_symmetric_case_kills_phi(self):
        model = build_model([0.5, 0.5])
        assert model.phi.tolist() == [0.0, 0.0]

    def test_quarter_probability(self):
        model = build_model([0.25])
        assert model.phi[0] == pytest.approx(2.0 / math.sqrt(3.0), abs=1e-15)

    def test_skewed_probability(self):
        model = build_model([0.1])
        assert model.sigma[0] == pytest.approx(0.3, abs=1e-15)
        assert model.phi[0] == pytest.approx(0.8 / 0.3, abs=1e-15)

    @pytest.mark.parametrize("bad", [[0.0], [1.0], [-0.2], [1.3], [0.4, float("nan")]])
    def test_out_of_range(self, bad):
        with pytest.raises(OutOfRangeProbability):
            build_model(bad)

    def test_empty(self):
        with pytest.raises(EmptyModel):
            build_model([])

    @given(prob_vectors)
    def test_derived_identities(self, p):
        model = build_model(p)
        np.testing.assert_allclose(model.sigma**2, model.p * model.q, atol=1e-15)
        np.testing.assert_allclose(
            model.phi * model.sigma, model.q - model.p, atol=1e-15
        )

    def test_enumeration_cap(self):
        model = build_model([0.5] * 25)
        with pytest.raises(EnumerationCapExceeded):
            model.outcome_weights


class TestOutcomeWeight:
    def test_single_fair_coin(self):
        model = build_model([0.5])
        assert outcome_weight(model, Outcome((1,))) == 0.5

    def test_product_of_marginals(self):
        model = build_model([0.1, 0.2])
        assert outcome_weight(model, Outcome((1, -1))) == pytest.approx(0.08, abs=1e-15)

    def test_length_mismatch(self):
        model = build_model([0.1, 0.2])
        with pytest.raises(LengthMismatch):
            outcome_weight(model, Outcome((1,)))

    @given(prob_vectors)
    def test_weights_form_probability_measure(self, p):
        model = build_model(p)
        w = model.outcome_weights
        assert np.all(w >= 0)
        assert abs(math.fsum(w) - 1.0) < 1e-12


class TestStandardizedValue:
    def test_symmetric(self):
        model = build_model([0.5])
        assert standardized_value(model, 1, Outcome((1,))) == 1.0

    def test_quarter(self):
        model = build_model([0.25])
        assert standardized_value(model, 1, Outcome((1,))) == pytest.approx(
            math.sqrt(3.0)
        )

    @given(prob_vectors)
    def test_mean_zero_variance_one(self, p):
        model = build_model(p)
        w = model.outcome_weights
        for k in range(1, model.size + 1):
            y = model.y_table(k)
            assert abs(math.fsum(w * y)) < 1e-12
            assert abs(math.fsum(w * y * y) - 1.0) < 1e-12

    def test_orthonormal_pairs(self):
        model = build_model([0.2, 0.7, 0.4])
        w = model.outcome_weights
        for k in range(1, 4):
            for j in range(1, 4):
                got = math.fsum(w * model.y_table(k) * model.y_table(j))
                assert abs(got - (1.0 if k == j else 0.0)) < 1e-12

    def test_index_out_of_range(self):
        model = build_model([0.5])
        with pytest.raises(IndexOutOfRange):
            standardized_value(model, 2, Outcome((1,)))


class TestStructureIdentity:
    @given(prob_vectors)
    def test_pointwise(self, p):
        model = build_model(p)
        for k in range(1, model.size + 1):
            y = model.y_table(k)
            np.testing.assert_allclose(
                y * y, 1.0 + model.phi[k - 1] * y, atol=1e-12
            )


class TestFlip:
    def test_forces_sign(self):
        assert flip(Outcome((-1, -1)), 1, 1) == Outcome((1, -1))

    def test_idempotent(self):
        omega = Outcome((-1, 1, -1))
        once = flip(omega, 2, 1)
        assert flip(once, 2, 1) == once

    def test_fixed_point(self):
        omega = Outcome((-1, 1))
        assert flip(omega, 2, 1) is omega

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            flip(Outcome((1,)), 2, 1)


class TestExpectationVariance:
    def test_constant(self):
        model = build_model([0.3, 0.6])
        table = FunctionalTable.constant(model, 4.25)
        assert expectation(model, table) == pytest.approx(4.25, abs=1e-15)
        assert variance(model, table) == pytest.approx(0.0, abs=1e-15)

    def test_standardized_coordinate(self):
        model = build_model([0.17, 0.83])
        table = FunctionalTable(model, model.y_table(2))
        assert abs(expectation(model, table)) < 1e-12
        assert variance(model, table) == pytest.approx(1.0, abs=1e-12)

    def test_bernoulli_sum_moments(self):
        model = build_model([0.1, 0.2])
        idx = np.arange(4)
        values = ((idx & 1) > 0) * 1.0 + ((idx & 2) > 0) * 1.0
        table = FunctionalTable(model, values)
        assert expectation(model, table) == pytest.approx(0.3, abs=1e-12)
        assert variance(model, table) == pytest.approx(0.25, abs=1e-12)

    def test_matches_direct_enumeration(self):
        rng = random.Random(3)
        model = build_model(oracles.rand_model_p(rng, 5))
        values = np.array([rng.uniform(-2, 2) for _ in range(32)])
        table = FunctionalTable(model, values)
        assert expectation(model, table) == pytest.approx(
            oracles.brute_expect(model.p, values), abs=1e-13
        )


class TestDistribution:
    def test_constant(self):
        model = build_model([0.4, 0.4])
        dist = distribution(model, FunctionalTable.constant(model, 3.0))
        assert dist.pmf == {3: 1.0}

    def test_single_bernoulli(self):
        model = build_model([0.3])
        table = FunctionalTable(model, np.array([0.0, 1.0]))
        dist = distribution(model, table)
        assert dist.pmf[0] == pytest.approx(0.7, abs=1e-15)
        assert dist.pmf[1] == pytest.approx(0.3, abs=1e-15)

    def test_non_integer_reports_outcome(self):
        model = build_model([0.5, 0.5])
        table = FunctionalTable(model, np.array([0.0, 1.0, 2.0, 2.5]))
        with pytest.raises(NonIntegerValue) as err:
            distribution(model, table)
        assert err.value.outcome_index == 3
        assert err.value.value == 2.5

    def test_negative_rejected(self):
        model = build_model([0.5])
        with pytest.raises(NonIntegerValue):
            distribution(model, FunctionalTable(model, np.array([-1.0, 2.0])))

    def test_mean_consistency(self):
        rng = random.Random(11)
        model = build_model(oracles.rand_model_p(rng, 6))
        table = FunctionalTable(model, oracles.rand_integer_table(rng, 64))
        dist = distribution(model, table)
        assert dist.mean() == pytest.approx(expectation(model, table), abs=1e-10)
        assert abs(math.fsum(dist.pmf.values()) - 1.0) < 1e-12

    def test_table_rejects_bad_pmf(self):
        from radstein.model import DistributionTable

        with pytest.raises(ValueError):
            DistributionTable({0: 0.5, 1: 0.4})
        with pytest.raises(ValueError):
            DistributionTable({0: 1.2, 1: -0.2})
        with pytest.raises(ValueError):
            DistributionTable({-1: 0.5, 1: 0.5})


class TestOutcomeIndexing:
    def test_round_trip_and_weight_table_agreement(self):
        model = build_model([0.2, 0.7, 0.45])
        for idx in range(8):
            omega = Outcome.from_index(idx, 3)
            assert omega.index == idx
            assert outcome_weight(model, omega) == pytest.approx(
                model.outcome_weights[idx], abs=1e-16
            )
