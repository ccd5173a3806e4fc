import math
import random

import numpy as np
import pytest

from radstein.bounds import (
    J2_RATE_CONSTANT,
    BoundReport,
    bernoulli_bound,
    bernoulli_sum_table,
    j1_bound,
    j2_bound,
    j2_example,
    j2_example_integer_form,
    j2_example_kernel,
    j2_example_machinery,
    jm_bound,
    main_bound,
    main_bound_reduced,
    second_order_bound,
    wasserstein_bound,
)
from radstein.chaos import ChaosExpansion, to_table
from radstein.distance import tv_exact, w1_exact
from radstein.errors import InvalidLambda, NonIntegerValue, OrderTooSmall
from radstein.kernels import Kernel
from radstein.model import (
    FunctionalTable,
    build_model,
    distribution,
    expectation,
)

import oracles


def sup_factor(lam):
    return min(1.0, math.sqrt(2.0 / (math.e * lam)))


def diff_factor(lam):
    return (1.0 - math.exp(-lam)) / lam


def integer_pair_functional(seed, size=6, pairs=2, shift=2.0):
    """shift + sum of Y_i Y_j over disjoint fair-coin pairs: values in N0."""
    rng = random.Random(seed)
    model = build_model([0.5] * size)
    coords = list(range(1, size + 1))
    rng.shuffle(coords)
    entries = {}
    for i in range(pairs):
        a, b = sorted(coords[2 * i : 2 * i + 2])
        entries[(a, b)] = 0.5
    return model, Kernel(2, entries), float(shift)


class TestMainBound:
    def test_constant_functional(self):
        model = build_model([0.3, 0.6])
        lam = 1.5
        report = main_bound(model, FunctionalTable.constant(model, 3.0), lam)
        assert report.term_mean_shift == pytest.approx(
            sup_factor(lam) * abs(lam - 3.0), rel=1e-13
        )
        assert report.term_variance_like == pytest.approx(
            1.0 - math.exp(-lam), rel=1e-13
        )
        assert report.term_remainder == 0.0

    def test_bernoulli_sum_equals_closed_form(self):
        model = build_model([0.12, 0.4, 0.33, 0.25])
        table = bernoulli_sum_table(model)
        for lam in (0.7, float(np.sum(model.p)), 2.0):
            got = main_bound(model, table, lam)
            closed = bernoulli_bound(model.p, lam)
            assert got.total == pytest.approx(closed.total, abs=1e-10)

    def test_reduced_form_is_identical(self):
        rng = random.Random(1)
        model = build_model(oracles.rand_model_p(rng, 7))
        table = FunctionalTable(model, oracles.rand_integer_table(rng, 128))
        lam = expectation(model, table)
        a = main_bound(model, table, lam)
        b = main_bound_reduced(model, table, lam)
        assert a.term_mean_shift == pytest.approx(b.term_mean_shift, abs=1e-14)
        assert a.term_variance_like == pytest.approx(b.term_variance_like, abs=1e-12)
        assert a.term_remainder == pytest.approx(b.term_remainder, abs=1e-12)

    def test_rejects_non_integer(self):
        model = build_model([0.5, 0.5])
        table = FunctionalTable(model, np.array([0.0, 1.0, 0.5, 2.0]))
        with pytest.raises(NonIntegerValue):
            main_bound(model, table, 1.0)

    def test_rejects_bad_lambda(self):
        model = build_model([0.5])
        with pytest.raises(InvalidLambda):
            main_bound(model, FunctionalTable.constant(model, 1.0), 0.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_dominates_exact_tv(self, seed):
        rng = random.Random(40 + seed)
        model = build_model(oracles.rand_model_p(rng, rng.randint(2, 9)))
        table = FunctionalTable(
            model, oracles.rand_integer_table(rng, model.num_outcomes)
        )
        lam = expectation(model, table)
        exact = tv_exact(distribution(model, table), lam).value
        assert main_bound(model, table, lam).total >= exact - 1e-12


class TestWassersteinBound:
    def test_constant_functional(self):
        model = build_model([0.4])
        lam = 2.0
        report = wasserstein_bound(model, FunctionalTable.constant(model, 3.0), lam)
        c2 = min(1.0, 8.0 / (3.0 * math.sqrt(2.0 * math.e * lam)))
        assert report.total == pytest.approx(abs(lam - 3.0) + c2 * lam, rel=1e-13)

    def test_bernoulli_mean_kills_first_term(self):
        model = build_model([0.3, 0.2])
        table = bernoulli_sum_table(model)
        report = wasserstein_bound(model, table, float(np.sum(model.p)))
        assert report.term_mean_shift < 1e-12

    def test_large_mean_switches_both_coefficients(self):
        # at lam = 10 both minimum branches flip: 8/(3 sqrt(2 e lam)) < 1 and
        # 2/lam < 4/3
        model = build_model([0.4, 0.5])
        table = bernoulli_sum_table(model)
        lam = 10.0
        report = wasserstein_bound(model, table, lam)
        c2 = 8.0 / (3.0 * math.sqrt(2.0 * math.e * lam))
        assert c2 < 1.0
        sum_pq = float(np.sum(model.p * model.q))
        sum_ppq = float(np.sum(model.p**2 * model.q))
        assert report.term_variance_like == pytest.approx(
            c2 * abs(lam - sum_pq), rel=1e-12
        )
        assert report.term_remainder == pytest.approx(
            (2.0 / lam) * sum_ppq, rel=1e-12
        )

    @pytest.mark.parametrize("seed", range(5))
    def test_dominates_exact_w1(self, seed):
        rng = random.Random(60 + seed)
        model = build_model(oracles.rand_model_p(rng, rng.randint(2, 9)))
        table = FunctionalTable(
            model, oracles.rand_integer_table(rng, model.num_outcomes)
        )
        lam = expectation(model, table)
        exact = w1_exact(distribution(model, table), lam).value
        assert wasserstein_bound(model, table, lam).total >= exact - 1e-12


class TestJ1Bound:
    def test_zero_kernel_reduces_to_constant_case(self):
        model = build_model([0.5, 0.5])
        report = j1_bound(model, Kernel.zero(1), 2.0, 1.0)
        constant = main_bound(model, FunctionalTable.constant(model, 2.0), 1.0)
        assert report.total == pytest.approx(constant.total, abs=1e-12)

    def test_bernoulli_kernel_third_term(self):
        model = build_model([0.15, 0.3, 0.45])
        f = Kernel(1, {(k,): model.sigma[k - 1] for k in (1, 2, 3)})
        lam = 0.9
        report = j1_bound(model, f, float(np.sum(model.p)), lam)
        expected = diff_factor(lam) * 2.0 * float(np.sum(model.p**2 * model.q))
        assert report.term_remainder == pytest.approx(expected, rel=1e-12)
        # entrywise nonnegative kernel: the displayed monotone variant agrees
        assert report.detail["term_remainder_monotone_variant"] == pytest.approx(
            report.term_remainder, rel=1e-12
        )

    def test_agrees_with_main_bound(self):
        model = build_model([0.2, 0.5, 0.65, 0.4])
        f = Kernel(1, {(k,): model.sigma[k - 1] for k in range(1, 5)})
        shift = float(np.sum(model.p))
        table = to_table(model, ChaosExpansion(shift, {1: f}))
        for lam in (0.5, shift, 3.0):
            a = j1_bound(model, f, shift, lam)
            b = main_bound(model, table, lam)
            assert a.total == pytest.approx(b.total, abs=1e-10)

    def test_monotone_variant_differs_for_signed_kernels(self):
        # With a negative entry the two displayed forms need not agree; the
        # evaluated form is the one the general bound produces.  Here
        # F = 4 + J_1(f) takes values {0, 5}, so it is a legitimate input.
        model = build_model([0.2])
        f = Kernel(1, {(1,): -2.0})
        report = j1_bound(model, f, 4.0, 1.0)
        variant = report.detail["term_remainder_monotone_variant"]
        assert abs(variant - report.term_remainder) > 1e-3
        table = to_table(model, ChaosExpansion(4.0, {1: f}))
        general = main_bound(model, table, 1.0)
        assert report.total == pytest.approx(general.total, abs=1e-12)

    def test_non_integer_rejected(self):
        model = build_model([0.3, 0.3])
        f = Kernel(1, {(1,): 0.7})
        with pytest.raises(NonIntegerValue):
            j1_bound(model, f, 0.0, 1.0)


class TestBernoulliBound:
    def test_frozen_example(self):
        report = bernoulli_bound([0.1] * 10, 1.0)
        expected = (1.0 - math.exp(-1.0)) * (0.1 + 2 * 0.09)
        assert report.total == pytest.approx(expected, rel=1e-12)

    def test_mean_matching_inequality(self):
        rng = random.Random(5)
        for _ in range(20):
            p = oracles.rand_model_p(rng, rng.randint(1, 12), lo=0.01, hi=0.6)
            lam = math.fsum(p)
            report = bernoulli_bound(p, lam)
            cap = 3.0 * diff_factor(lam) * math.fsum(x * x for x in p)
            assert report.total <= cap + 1e-12

    @pytest.mark.parametrize("lam", [0.6, 1.0, 2.0])
    def test_dominates_poisson_binomial_tv(self, lam):
        rng = random.Random(int(lam * 10))
        for _ in range(10):
            p = oracles.rand_model_p(rng, rng.randint(1, 14), lo=0.02, hi=0.7)
            from radstein.model import DistributionTable

            dist = DistributionTable(oracles.poisson_binomial_pmf(p))
            exact = tv_exact(dist, lam).value
            assert bernoulli_bound(p, lam).total >= exact - 1e-12


class TestFixedOrderBounds:
    @pytest.mark.parametrize("seed", range(6))
    def test_j2_equals_jm_at_order_two(self, seed):
        rng = random.Random(80 + seed)
        size = rng.randint(3, 7)
        model = build_model(oracles.rand_model_p(rng, size))
        f = oracles.rand_kernel(rng, 2, size)
        lam = rng.uniform(0.3, 3.0)
        shift = float(rng.randint(0, 4))
        a = jm_bound(model, f, shift, lam, check_integer=False)
        b = j2_bound(model, f, shift, lam, check_integer=False)
        assert a.total == pytest.approx(b.total, abs=1e-10, rel=1e-10)
        assert a.term_remainder == pytest.approx(b.term_remainder, abs=1e-10, rel=1e-10)

    def test_order_one_rejected(self):
        model = build_model([0.5, 0.5])
        with pytest.raises(OrderTooSmall):
            jm_bound(model, Kernel(1, {(1,): 1.0}), 0.0, 1.0)
        with pytest.raises(OrderTooSmall):
            j2_bound(model, Kernel(1, {(1,): 1.0}), 0.0, 1.0)

    def test_integer_pair_functional_dominates_tv(self):
        for seed in range(4):
            model, f, shift = integer_pair_functional(seed)
            table = to_table(model, ChaosExpansion(shift, {2: f}))
            lam = expectation(model, table)
            exact = tv_exact(distribution(model, table), lam).value
            for report in (
                jm_bound(model, f, shift, lam),
                j2_bound(model, f, shift, lam),
                main_bound(model, table, lam),
            ):
                assert report.total >= exact - 1e-12

    def test_zero_kernel_reduces_to_constant_case(self):
        model = build_model([0.4, 0.6])
        got = j2_bound(model, Kernel.zero(2), 2.0, 1.0)
        constant = main_bound(model, FunctionalTable.constant(model, 2.0), 1.0)
        assert got.total == pytest.approx(constant.total, abs=1e-12)

    def test_untouched_coordinates_do_not_change_the_bound(self):
        rng = random.Random(17)
        small = build_model([0.3, 0.45, 0.6])
        padded = build_model([0.3, 0.45, 0.6, 0.8, 0.12])
        f = oracles.rand_kernel(rng, 2, 3)
        for lam in (0.4, 1.7):
            a = jm_bound(small, f, 1.0, lam, check_integer=False)
            b = jm_bound(padded, f, 1.0, lam, check_integer=False)
            assert a.total == pytest.approx(b.total, abs=1e-13)

    def test_order_three_runs_and_is_consistent(self):
        rng = random.Random(90)
        model = build_model(oracles.rand_model_p(rng, 6))
        f = oracles.rand_kernel(rng, 3, 6, density=0.4)
        report = jm_bound(model, f, 1.0, 1.0, check_integer=False)
        assert report.total >= report.term_mean_shift
        assert report.detail["order"] == 3


class TestFixedOrderGrouping:
    """The grouped contraction kernels against an enumeration oracle.

    (1/m) sum_k (D_k J_m(f))^2 has mean m! ||f||^2 and order-s kernel
    m * g_s, where g_s is the grouped kernel entering the fluctuation term;
    decomposing the enumerated table recovers both.
    """

    @pytest.mark.parametrize("m,seed", [(2, 0), (2, 1), (3, 2), (3, 3)])
    def test_fluctuation_kernels_match_decomposition(self, m, seed):
        from radstein.bounds import _grouped_fluctuation_kernels
        from radstein.chaos import decompose
        from radstein.kernels import inner_product
        from radstein.malliavin import gradient_pathwise

        rng = random.Random(seed)
        size = rng.randint(m + 2, 6)
        model = build_model(oracles.rand_model_p(rng, size))
        f = oracles.rand_kernel(rng, m, size, density=0.5)
        table = to_table(model, ChaosExpansion(0.0, {m: f}))
        quad = np.zeros(model.num_outcomes)
        for k in range(1, size + 1):
            quad += gradient_pathwise(model, table, k).values ** 2
        observed = decompose(model, FunctionalTable(model, quad / m))
        assert observed.mean == pytest.approx(
            math.factorial(m) * inner_product(f, f), abs=1e-10
        )
        grouped = _grouped_fluctuation_kernels(model, f)
        orders = {s for s, k in grouped.items() if not k.is_zero()}
        for s in orders | set(observed.kernels):
            expected = grouped.get(s, Kernel.zero(s)).scaled(float(m))
            got = observed.kernel(s)
            for key in set(expected.entries) | set(got.entries):
                assert got.entries.get(key, 0.0) == pytest.approx(
                    expected.entries.get(key, 0.0), abs=1e-10
                )

    @pytest.mark.parametrize("m,seed", [(2, 4), (3, 5)])
    def test_slice_kernels_match_decomposition(self, m, seed):
        from radstein.bounds import _grouped_slice_kernels
        from radstein.chaos import decompose
        from radstein.kernels import kernel_add, norm_sq, slice_kernel
        from radstein.malliavin import gradient_pathwise

        rng = random.Random(seed)
        size = rng.randint(m + 2, 6)
        model = build_model(oracles.rand_model_p(rng, size))
        f = oracles.rand_kernel(rng, m, size, density=0.5)
        table = to_table(model, ChaosExpansion(0.0, {m: f}))
        for k in range(1, size + 1):
            fk = slice_kernel(f, k)
            if fk.is_zero():
                continue
            sigma = model.sigma[k - 1]
            drift = sigma * (model.p[k - 1] - model.q[k - 1])
            dk = gradient_pathwise(model, table, k).values
            observed = decompose(
                model, FunctionalTable(model, (dk * dk + drift * dk) / (m * m))
            )
            assert observed.mean == pytest.approx(
                math.factorial(m - 1) * norm_sq(fk), abs=1e-10
            )
            grouped = _grouped_slice_kernels(model, fk, m)
            special = grouped.get(m - 1, Kernel.zero(m - 1))
            special = kernel_add(special, fk.scaled(drift / m))
            grouped = {**grouped, m - 1: special}
            for s in set(grouped) | set(observed.kernels):
                expected = grouped.get(s, Kernel.zero(s))
                got = observed.kernel(s)
                for key in set(expected.entries) | set(got.entries):
                    assert got.entries.get(key, 0.0) == pytest.approx(
                        expected.entries.get(key, 0.0), abs=1e-10
                    )


class TestSecondOrderBound:
    def test_constant_functional(self):
        model = build_model([0.25, 0.5])
        lam = 0.8
        report = second_order_bound(model, FunctionalTable.constant(model, 1.0), lam)
        assert report.term_remainder == 0.0
        assert report.total == pytest.approx(
            sup_factor(lam) * abs(lam - 1.0) + (1.0 - math.exp(-lam)), rel=1e-12
        )

    def test_bernoulli_specialization_matches_closed_form(self):
        model = build_model([0.1, 0.35, 0.6, 0.22])
        table = bernoulli_sum_table(model)
        for lam in (0.5, float(np.sum(model.p)), 2.5):
            a = second_order_bound(model, table, lam)
            b = bernoulli_bound(model.p, lam)
            assert a.total == pytest.approx(b.total, abs=1e-10)

    @pytest.mark.parametrize("seed", range(3))
    def test_dominates_exact_tv(self, seed):
        rng = random.Random(70 + seed)
        model = build_model(oracles.rand_model_p(rng, rng.randint(2, 7)))
        table = FunctionalTable(
            model, oracles.rand_integer_table(rng, model.num_outcomes)
        )
        lam = expectation(model, table)
        exact = tv_exact(distribution(model, table), lam).value
        assert second_order_bound(model, table, lam).total >= exact - 1e-12


class TestJ2Example:
    def test_smallest_case_closed_form(self):
        record = j2_example(2)
        assert record.lam == pytest.approx(1.0 / 16.0, rel=1e-15)
        assert record.total == pytest.approx(3.0 / 16.0, rel=1e-14)
        assert record.a3 == 0.0 and record.a4 == 0.0 and record.a6 == 0.0
        assert record.a5 == pytest.approx(1.0 / 512.0, rel=1e-14)

    def test_a7_vanishes_identically(self):
        for n in (2, 3, 7, 15):
            assert j2_example(n).a7 == 0.0
            assert j2_example_machinery(n).a7 < 1e-30

    @pytest.mark.parametrize("n", [2, 3, 4, 8, 17, 30])
    def test_machinery_matches_closed_forms(self, n):
        closed = j2_example(n)
        machinery = j2_example_machinery(n)
        for name in ("lam", "a1", "a2", "a3", "a4", "a5", "a6", "total"):
            a, b = getattr(closed, name), getattr(machinery, name)
            assert b == pytest.approx(a, rel=1e-12, abs=1e-30)

    def test_rate_constant_on_sample(self):
        for n in (2, 10, 100, 1000, 10_000):
            record = j2_example(n)
            assert record.total * math.sqrt(n) <= J2_RATE_CONSTANT

    def test_integer_form_support(self):
        table = j2_example_integer_form(2)
        dist = distribution(table.model, table)
        assert set(dist.pmf) == {1, 2, 4}
        assert min(dist.pmf) >= 1

    def test_kernel_matches_variance(self):
        model, kernel = j2_example_kernel(5)
        from radstein.chaos import covariance

        assert covariance(model, kernel, kernel) == pytest.approx(
            j2_example(5).lam, rel=1e-13
        )

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            j2_example(1)


class TestBoundReport:
    def test_terms_sum_to_total(self):
        report = bernoulli_bound([0.2, 0.3], 0.5)
        assert report.total == pytest.approx(
            report.term_mean_shift + report.term_variance_like + report.term_remainder,
            abs=1e-15,
        )

    def test_negative_term_rejected(self):
        with pytest.raises(ValueError):
            BoundReport(1.0, -0.1, 0.0, 0.0, -0.1, "x")
