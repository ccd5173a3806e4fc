"""Explicit Poisson-approximation bounds, exact by enumeration or closed form.

Every operation returns a :class:`BoundReport` whose three public terms sum
to the total: the mean-shift term, the variance-like term, and the remainder
collecting everything else.  A ``detail`` mapping carries the finer per-term
split for reporting.  Gradients entering expectations are always computed by
coordinate flips on value tables, never through the chaos route, so the chaos
machinery remains an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chaos import ChaosExpansion, to_table
from .errors import InvalidLambda, OrderTooSmall
from .kernels import (
    Kernel,
    contract,
    inner_product,
    kernel_add,
    norm_sq,
    slice_kernel,
    sym_offdiag_weighted_contract,
    weighted_contract,
)
from .malliavin import gradient_pathwise, minus_gradient_pseudo_inverse
from .model import (
    FunctionalTable,
    ProbabilityModel,
    build_model,
    expectation,
    integer_values,
    stable_sum,
    variance,
)

J2_RATE_CONSTANT = 2.5 + math.sqrt(2.0)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0.0:
        raise InvalidLambda(f"Poisson mean must be positive and finite, got {lam!r}")
    return lam


def _tv_factors(lam: float) -> tuple:
    """(sup-norm factor, difference factor) of the Chen-Stein solution."""
    return min(1.0, math.sqrt(2.0 / (math.e * lam))), -math.expm1(-lam) / lam


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound: lambda, three nonnegative terms, their total."""

    lam: float
    term_mean_shift: float
    term_variance_like: float
    term_remainder: float
    total: float
    method: str
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        terms = (self.term_mean_shift, self.term_variance_like, self.term_remainder)
        if any(t < 0 for t in terms):
            raise ValueError(f"bound terms must be nonnegative, got {terms}")
        if abs(self.total - math.fsum(terms)) > 1e-12:
            raise ValueError("total must equal the sum of the three terms")


def _report(lam, t1, t2, t3, method, detail=None) -> BoundReport:
    return BoundReport(
        lam=lam,
        term_mean_shift=t1,
        term_variance_like=t2,
        term_remainder=t3,
        total=math.fsum((t1, t2, t3)),
        method=method,
        detail=detail or {},
    )


def _sign_table(model: ProbabilityModel, k: int) -> np.ndarray:
    idx = np.arange(model.num_outcomes)
    return np.where((idx >> (k - 1)) & 1 == 1, 1.0, -1.0)


def _paired_gradient_terms(model: ProbabilityModel, table: FunctionalTable):
    """Shared setup: pathwise D_k F and -D_k L^{-1}(F - E[F]) for every k."""
    grads = [
        gradient_pathwise(model, table, k).values for k in range(1, model.size + 1)
    ]
    minus_dl = [t.values for t in minus_gradient_pseudo_inverse(model, table)]
    return grads, minus_dl


def main_bound(model: ProbabilityModel, table: FunctionalTable, lam: float) -> BoundReport:
    """The general total-variation bound for an N0-valued functional.

    Terms: (1 ^ sqrt(2/(e lam))) |lam - E F|, then (1-e^{-lam})/lam times the
    expected absolute carre-du-champ gap |lam - <DF, -DL^{-1}(F-EF)>|, then the
    same factor times E<(1/sqrt(pq)) DF (DF + sqrt(pq) X), |-DL^{-1}(F-EF)|>.
    """
    lam = _check_lambda(lam)
    integer_values(table)
    sup_f, diff_f = _tv_factors(lam)
    w = model.outcome_weights
    mean = expectation(model, table)
    grads, minus_dl = _paired_gradient_terms(model, table)
    inner = np.zeros(model.num_outcomes)
    third = np.zeros(model.num_outcomes)
    for k in range(1, model.size + 1):
        dk = grads[k - 1]
        gk = minus_dl[k - 1]
        inner += dk * gk
        sigma = model.sigma[k - 1]
        third += (1.0 / sigma) * dk * (dk + sigma * _sign_table(model, k)) * np.abs(gk)
    t1 = sup_f * abs(lam - mean)
    t2 = diff_f * stable_sum(w * np.abs(lam - inner))
    t3 = diff_f * stable_sum(w * third)
    return _report(lam, t1, t2, t3, "main")


def main_bound_reduced(
    model: ProbabilityModel, table: FunctionalTable, lam: float
) -> BoundReport:
    """Same bound with the sign variable integrated out of the third term:
    sqrt(pq) X is replaced by its mean sqrt(pq)(p - q) coordinatewise."""
    lam = _check_lambda(lam)
    integer_values(table)
    sup_f, diff_f = _tv_factors(lam)
    w = model.outcome_weights
    mean = expectation(model, table)
    grads, minus_dl = _paired_gradient_terms(model, table)
    inner = np.zeros(model.num_outcomes)
    per_k = []
    for k in range(1, model.size + 1):
        dk = grads[k - 1]
        gk = minus_dl[k - 1]
        inner += dk * gk
        sigma = model.sigma[k - 1]
        drift = sigma * (model.p[k - 1] - model.q[k - 1])
        per_k.append(
            (1.0 / sigma) * stable_sum(w * dk * (dk + drift) * np.abs(gk))
        )
    t1 = sup_f * abs(lam - mean)
    t2 = diff_f * stable_sum(w * np.abs(lam - inner))
    t3 = diff_f * stable_sum(per_k)
    return _report(lam, t1, t2, t3, "main_reduced")


def wasserstein_bound(
    model: ProbabilityModel, table: FunctionalTable, lam: float
) -> BoundReport:
    """Wasserstein-distance analogue with the Lipschitz-test-class factors
    1, 1 ^ 8/(3 sqrt(2 e lam)) and 4/3 ^ 2/lam; the second-difference factor
    multiplies the half-weighted gradient product."""
    lam = _check_lambda(lam)
    integer_values(table)
    c1 = 1.0
    c2 = min(1.0, 8.0 / (3.0 * math.sqrt(2.0 * math.e * lam)))
    c3 = min(4.0 / 3.0, 2.0 / lam)
    w = model.outcome_weights
    mean = expectation(model, table)
    grads, minus_dl = _paired_gradient_terms(model, table)
    inner = np.zeros(model.num_outcomes)
    third = np.zeros(model.num_outcomes)
    for k in range(1, model.size + 1):
        dk = grads[k - 1]
        gk = minus_dl[k - 1]
        inner += dk * gk
        sigma = model.sigma[k - 1]
        third += (
            (0.5 / sigma) * dk * (dk + sigma * _sign_table(model, k)) * np.abs(gk)
        )
    t1 = c1 * abs(lam - mean)
    t2 = c2 * stable_sum(w * np.abs(lam - inner))
    t3 = c3 * stable_sum(w * third)
    return _report(lam, t1, t2, t3, "wasserstein")


def j1_bound(
    model: ProbabilityModel,
    f: Kernel,
    shift: float,
    lam: float,
    check_integer: bool = True,
) -> BoundReport:
    """Closed-form bound for F = shift + J_1(f), integer-valuedness checked by
    enumeration.

    The remainder follows the evaluated form
    sum_k (f(k)^2 + sqrt(pq)(p-q) f(k)) |f(k)| / sqrt(pq); the displayed
    monotone variant |f(k)|^3 + sqrt(pq)(p-q) f(k)^2 coincides with it for
    entrywise nonnegative kernels and is reported in the detail map.
    """
    lam = _check_lambda(lam)
    if f.order != 1:
        raise OrderTooSmall(f"expected an order-1 kernel, got order {f.order}")
    if check_integer:
        integer_values(to_table(model, ChaosExpansion(float(shift), {1: f})))
    sup_f, diff_f = _tv_factors(lam)
    mean = float(shift)
    norm2 = inner_product(f, f)
    per_k = []
    per_k_abs = []
    for (k,), c in sorted(f.entries.items()):
        sigma = model.sigma[k - 1]
        drift = sigma * (model.p[k - 1] - model.q[k - 1])
        per_k.append((c * c + drift * c) * abs(c) / sigma)
        per_k_abs.append((abs(c) ** 3 + drift * c * c) / sigma)
    t1 = sup_f * abs(lam - mean)
    t2 = diff_f * abs(lam - norm2)
    t3 = diff_f * stable_sum(per_k)
    alt = diff_f * stable_sum(per_k_abs)
    return _report(lam, t1, t2, t3, "j1", {"term_remainder_monotone_variant": alt})


def bernoulli_bound(p, lam: float) -> BoundReport:
    """Closed-form bound for a sum of independent Bernoulli(p_k) variables."""
    lam = _check_lambda(lam)
    model = build_model(p)
    sup_f, diff_f = _tv_factors(lam)
    sum_p = stable_sum(model.p)
    sum_pq = stable_sum(model.p * model.q)
    sum_ppq = stable_sum(model.p * model.p * model.q)
    t1 = sup_f * abs(lam - sum_p)
    t2 = diff_f * abs(lam - sum_pq)
    t3 = 2.0 * diff_f * sum_ppq
    return _report(lam, t1, t2, t3, "bernoulli")


def _jm_coefficient(m: int, r: int, ell: int) -> float:
    return float(
        math.factorial(r - 1)
        * math.comb(m - 1, r - 1) ** 2
        * math.comb(r - 1, ell - 1)
    )


def _grouped_fluctuation_kernels(model: ProbabilityModel, f: Kernel) -> dict:
    """Kernels of sum_k (D_k J_m(f))^2 / m^2 above order 0, grouped by order.

    For each r = 1..m, l = 1..r the symmetrized off-diagonal weighted
    contraction of f with itself at (r, l) enters with coefficient
    (r-1)! C(m-1, r-1)^2 C(r-1, l-1) at order s = 2m - r - l; kernels of equal
    order are summed before any norm is taken.
    """
    m = f.order
    grouped: dict[int, Kernel] = {}
    for r in range(1, m + 1):
        for ell in range(1, r + 1):
            s = 2 * m - r - ell
            if s == 0:
                continue
            part = sym_offdiag_weighted_contract(model, f, f, r, ell)
            if part.is_zero():
                continue
            scaled = part.scaled(_jm_coefficient(m, r, ell))
            grouped[s] = kernel_add(grouped[s], scaled) if s in grouped else scaled
    return grouped


def _grouped_slice_kernels(model: ProbabilityModel, fk: Kernel, m: int) -> dict:
    """Kernels of (J_{m-1}(f(., k)))^2 above order 0, grouped by order.

    Same coefficients as the fluctuation grouping, but the slice of order
    m - 1 is contracted with itself at (r - 1, l - 1)."""
    grouped: dict[int, Kernel] = {}
    for r in range(1, m + 1):
        for ell in range(1, r + 1):
            s = 2 * m - r - ell
            if s == 0:
                continue
            part = sym_offdiag_weighted_contract(model, fk, fk, r - 1, ell - 1)
            if part.is_zero():
                continue
            scaled = part.scaled(_jm_coefficient(m, r, ell))
            grouped[s] = kernel_add(grouped[s], scaled) if s in grouped else scaled
    return grouped


def jm_bound(
    model: ProbabilityModel,
    f: Kernel,
    shift: float,
    lam: float,
    check_integer: bool = True,
) -> BoundReport:
    """Bound for F = shift + J_m(f) with m >= 2, via grouped contractions.

    The remainder has two square-root blocks: the fluctuation of the gradient
    inner product around its mean, and the sqrt(Var F)-weighted block over
    coordinates, whose order-(m-1) group carries the extra drift summand
    (1/m) sqrt(pq)(p - q) f(., k).
    """
    lam = _check_lambda(lam)
    m = f.order
    if m < 2:
        raise OrderTooSmall(f"fixed-order bound needs order >= 2, got {m}")
    if check_integer:
        integer_values(to_table(model, ChaosExpansion(float(shift), {m: f})))
    sup_f, diff_f = _tv_factors(lam)
    var = math.factorial(m) * inner_product(f, f)

    grouped = _grouped_fluctuation_kernels(model, f)
    fluct = stable_sum(
        math.factorial(s) * norm_sq(kernel) for s, kernel in grouped.items()
    )
    t3 = diff_f * math.sqrt(m * m * fluct)

    per_k = []
    for k in range(1, model.size + 1):
        fk = slice_kernel(f, k)
        if fk.is_zero():
            continue
        sigma = model.sigma[k - 1]
        drift = sigma * (model.p[k - 1] - model.q[k - 1])
        sliced_groups = _grouped_slice_kernels(model, fk, m)
        pieces = [((math.factorial(m - 1)) * norm_sq(fk)) ** 2]
        for s, kernel in sliced_groups.items():
            if s == m - 1:
                continue
            pieces.append(math.factorial(s) * norm_sq(kernel))
        special = sliced_groups.get(m - 1, Kernel.zero(m - 1))
        special = kernel_add(special, fk.scaled(drift / m))
        pieces.append(math.factorial(m - 1) * norm_sq(special))
        per_k.append(stable_sum(pieces) / (model.p[k - 1] * model.q[k - 1]))
    t4 = diff_f * math.sqrt(var) * math.sqrt(m ** 3 * stable_sum(per_k))

    t1 = sup_f * abs(lam - float(shift))
    t2 = diff_f * abs(lam - var)
    return _report(
        lam,
        t1,
        t2,
        math.fsum((t3, t4)),
        "jm",
        {"term_fluctuation": t3, "term_coordinate_block": t4, "order": m},
    )


def _offdiag_raw_norm_sq(raw) -> float:
    return stable_sum(
        v * v for key, v in raw.entries.items() if len(set(key)) == len(key)
    )


def j2_bound(
    model: ProbabilityModel,
    f: Kernel,
    shift: float,
    lam: float,
    check_integer: bool = True,
) -> BoundReport:
    """Order-2 specialization with explicit coefficients 4, 8 and 8, 16, 8."""
    lam = _check_lambda(lam)
    if f.order != 2:
        raise OrderTooSmall(f"expected an order-2 kernel, got order {f.order}")
    if check_integer:
        integer_values(to_table(model, ChaosExpansion(float(shift), {2: f})))
    sup_f, diff_f = _tv_factors(lam)
    var = 2.0 * inner_product(f, f)

    first_block = math.sqrt(
        4.0 * norm_sq(weighted_contract(model, f, f, 2, 1))
        + 8.0 * _offdiag_raw_norm_sq(contract(f, f, 1, 1))
    )

    per_k = []
    for k in range(1, model.size + 1):
        fk = slice_kernel(f, k)
        if fk.is_zero():
            continue
        pq = model.p[k - 1] * model.q[k - 1]
        sigma = model.sigma[k - 1]
        drift = sigma * (model.p[k - 1] - model.q[k - 1])
        sq_norm = norm_sq(fk)
        tensor_sq = _offdiag_raw_norm_sq(contract(fk, fk, 0, 0))
        mixed = weighted_contract(model, fk, fk, 1, 0)
        combined = dict(mixed.entries)
        for (i,), c in fk.entries.items():
            combined[(i,)] = combined.get((i,), 0.0) + 0.5 * drift * c
        mixed_sq = stable_sum(v * v for v in combined.values())
        per_k.append((8.0 * sq_norm * sq_norm + 16.0 * tensor_sq + 8.0 * mixed_sq) / pq)
    second_block = math.sqrt(var) * math.sqrt(stable_sum(per_k))

    t1 = sup_f * abs(lam - float(shift))
    t2 = diff_f * abs(lam - var)
    t3 = math.fsum((diff_f * first_block, diff_f * second_block))
    return _report(
        lam,
        t1,
        t2,
        t3,
        "j2",
        {
            "term_fluctuation": diff_f * first_block,
            "term_coordinate_block": diff_f * second_block,
        },
    )


def second_order_bound(
    model: ProbabilityModel, table: FunctionalTable, lam: float
) -> BoundReport:
    """Second-order bound from first and second gradient moments only.

    No chaos decomposition enters: all five terms are moments of D_k F and
    D_l D_k F, each computed exactly by enumeration.
    """
    lam = _check_lambda(lam)
    integer_values(table)
    sup_f, diff_f = _tv_factors(lam)
    w = model.outcome_weights
    n = model.size
    mean = expectation(model, table)
    var = variance(model, table)

    grads = [gradient_pathwise(model, table, k).values for k in range(1, n + 1)]
    grad_sq = [g * g for g in grads]
    second_sq = {}
    for j in range(1, n + 1):
        dj = FunctionalTable(model, grads[j - 1])
        for el in range(j, n + 1):
            d2 = gradient_pathwise(model, dj, el).values
            second_sq[(j, el)] = d2 * d2

    def dd_sq(j, el):
        return second_sq[(j, el)] if j <= el else second_sq[(el, j)]

    first_moments = {}
    for j in range(1, n + 1):
        for k in range(j, n + 1):
            first_moments[(j, k)] = stable_sum(w * grad_sq[j - 1] * grad_sq[k - 1])

    def m1(j, k):
        return first_moments[(j, k)] if j <= k else first_moments[(k, j)]

    triple_mixed = []
    triple_scaled = []
    for el in range(1, n + 1):
        pq = model.p[el - 1] * model.q[el - 1]
        for j in range(1, n + 1):
            for k in range(1, n + 1):
                m2 = stable_sum(w * dd_sq(el, j) * dd_sq(el, k))
                triple_mixed.append(math.sqrt(max(m1(j, k), 0.0) * max(m2, 0.0)))
                triple_scaled.append(m2 / pq)
    t3 = diff_f * math.sqrt(3.75 * stable_sum(triple_mixed))
    t4 = diff_f * math.sqrt(0.75 * max(stable_sum(triple_scaled), 0.0))

    per_k = []
    for k in range(1, n + 1):
        sigma = model.sigma[k - 1]
        drift = sigma * (model.p[k - 1] - model.q[k - 1])
        dk = grads[k - 1]
        quartic = stable_sum(w * grad_sq[k - 1] * (dk + drift) ** 2)
        quadratic = stable_sum(w * grad_sq[k - 1])
        per_k.append(math.sqrt(max(quartic, 0.0) * max(quadratic, 0.0)) / sigma)
    t5 = diff_f * stable_sum(per_k)

    t1 = sup_f * abs(lam - mean)
    t2 = diff_f * abs(lam - var)
    return _report(
        lam,
        t1,
        t2,
        math.fsum((t3, t4, t5)),
        "second_order",
        {"term_mixed_triple": t3, "term_scaled_triple": t4, "term_coordinate": t5},
    )


@dataclass(frozen=True)
class J2Example:
    """Closed-form record for the 1/n star example in one fixed chaos."""

    n: int
    lam: float
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float
    a7: float
    total: float


def j2_example_kernel(n: int) -> tuple:
    """The model p_k = 1/n and the star kernel with value (n-1)/(2 n^2) on
    every pair {1, j}, j = 2..n."""
    if n < 2:
        raise ValueError(f"the example needs n >= 2, got {n}")
    model = build_model([1.0 / n] * n)
    value = (n - 1) / (2.0 * n * n)
    kernel = Kernel(2, {(1, j): value for j in range(2, n + 1)})
    return model, kernel


def j2_example(n: int) -> J2Example:
    """Closed forms of the example's bound ingredients and their assembly.

    total = A1 + 2 sqrt(A3) + 2 sqrt(2 A4) + 2 sqrt(2 A5) + 4 sqrt(A6), which
    stays below (5/2 + sqrt 2) / sqrt(n) for every n >= 2.
    """
    if n < 2:
        raise ValueError(f"the example needs n >= 2, got {n}")
    nf = float(n)
    lam = (nf - 1) ** 3 / nf ** 4
    a1 = lam
    a3 = (nf - 1) ** 4 * (nf - 2) ** 2 / (16 * nf ** 7)
    a4 = (nf - 1) ** 5 * (nf - 2) / (16 * nf ** 8)
    a5 = (nf - 1) ** 4 / (16 * nf ** 5)
    a6 = (nf - 1) ** 4 * (nf - 2) / (16 * nf ** 6)
    total = math.fsum(
        (
            a1,
            2 * math.sqrt(a3),
            2 * math.sqrt(2 * a4),
            2 * math.sqrt(2 * a5),
            4 * math.sqrt(a6),
        )
    )
    return J2Example(n, lam, a1, 0.0, a3, a4, a5, a6, 0.0, total)


def j2_example_machinery(n: int) -> J2Example:
    """The same record with every ingredient recomputed through the general
    contraction machinery; must match the closed forms to 1e-12 relative."""
    model, f = j2_example_kernel(n)
    lam = 2.0 * inner_product(f, f)
    a1 = abs(lam - 0.0)
    a3 = norm_sq(weighted_contract(model, f, f, 2, 1))
    a4 = _offdiag_raw_norm_sq(contract(f, f, 1, 1))
    a5_parts = []
    a6_parts = []
    a7_parts = []
    for k in range(1, n + 1):
        fk = slice_kernel(f, k)
        pq = model.p[k - 1] * model.q[k - 1]
        sigma = model.sigma[k - 1]
        drift = sigma * (model.p[k - 1] - model.q[k - 1])
        a5_parts.append(norm_sq(fk) ** 2 / pq)
        a6_parts.append(_offdiag_raw_norm_sq(contract(fk, fk, 0, 0)) / pq)
        combined = dict(weighted_contract(model, fk, fk, 1, 0).entries)
        for (i,), c in fk.entries.items():
            combined[(i,)] = combined.get((i,), 0.0) + 0.5 * drift * c
        a7_parts.append(stable_sum(v * v for v in combined.values()) / pq)
    a5 = stable_sum(a5_parts)
    a6 = stable_sum(a6_parts)
    a7 = stable_sum(a7_parts)
    total = math.fsum(
        (
            a1,
            2 * math.sqrt(a3),
            2 * math.sqrt(2 * a4),
            2 * math.sqrt(2 * a5),
            4 * math.sqrt(a6),
        )
    )
    return J2Example(n, lam, a1, 0.0, a3, a4, a5, a6, a7, total)


def j2_example_integer_form(n: int) -> FunctionalTable:
    """Value table of the displayed integer form (B_1 - n) sum_{i>=2} (B_i - n)
    with B_k = (X_k + 1)/2 under p_k = 1/n."""
    model, _ = j2_example_kernel(n)
    idx = np.arange(model.num_outcomes)
    bits = [((idx >> k) & 1).astype(float) for k in range(n)]
    rest = sum(b - n for b in bits[1:])
    return FunctionalTable(model, (bits[0] - n) * rest)


def bernoulli_sum_table(model: ProbabilityModel) -> FunctionalTable:
    """Value table of sum_k (X_k + 1)/2, the Bernoulli-sum functional."""
    idx = np.arange(model.num_outcomes)
    total = np.zeros(model.num_outcomes)
    for k in range(model.size):
        total += ((idx >> k) & 1).astype(float)
    return FunctionalTable(model, total)
