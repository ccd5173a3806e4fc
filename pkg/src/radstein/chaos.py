"""Discrete multiple stochastic integrals and chaos decompositions.

J_n(f) = n! * sum over increasing tuples of f * Y_{i_1} ... Y_{i_n}; the
products of distinct standardized coordinates form an orthonormal basis of the
2^N-dimensional outcome space, so every value table decomposes uniquely into a
mean plus stochastic integrals of orders 1..N.  The transform in both
directions runs as an N-stage butterfly over the outcome bitmask, one fixed
deterministic pass per coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, LengthMismatch
from .kernels import (
    Kernel,
    inner_product,
    kernel_add,
    sym_offdiag_weighted_contract,
)
from .model import FunctionalTable, Outcome, ProbabilityModel, stable_sum


@dataclass(frozen=True, eq=False)
class ChaosExpansion:
    """Mean plus one kernel per chaos order; empty kernels are not stored."""

    mean: float = 0.0
    kernels: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for order, kernel in self.kernels.items():
            order = int(order)
            if order < 1:
                raise ValueError("chaos orders start at 1; constants go in mean")
            if kernel.order != order:
                raise ValueError(
                    f"kernel of order {kernel.order} stored under order {order}"
                )
            if not kernel.is_zero():
                clean[order] = kernel
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "kernels", dict(sorted(clean.items())))

    @property
    def orders(self) -> list:
        return list(self.kernels)

    def kernel(self, order: int) -> Kernel:
        return self.kernels.get(order, Kernel.zero(order))

    def max_order(self) -> int:
        return max(self.kernels, default=0)

    def max_index(self) -> int:
        return max((k.max_index() for k in self.kernels.values()), default=0)


def _check_kernel_indices(model: ProbabilityModel, f: Kernel) -> None:
    top = f.max_index()
    if top > model.size:
        raise IndexOutOfRange(f"kernel references index {top}, model has {model.size}")


def integral_value(model: ProbabilityModel, f: Kernel, omega: Outcome) -> float:
    """J_order(f) at a single outcome; order 0 returns the stored scalar."""
    _check_kernel_indices(model, f)
    if f.order == 0:
        return f.entries.get((), 0.0)
    if len(omega) != model.size:
        raise LengthMismatch("outcome does not match the model")
    y = [None] + [
        model.y_plus(k) if omega.bits[k - 1] == 1 else model.y_minus(k)
        for k in range(1, model.size + 1)
    ]
    scale = math.factorial(f.order)
    terms = []
    for key, coeff in f.entries.items():
        prod = coeff
        for i in key:
            prod *= y[i]
        terms.append(prod)
    return scale * stable_sum(terms)


def evaluate(model: ProbabilityModel, expansion: ChaosExpansion, omega: Outcome) -> float:
    """Pointwise value mean + sum of integral values."""
    return expansion.mean + stable_sum(
        integral_value(model, kernel, omega) for kernel in expansion.kernels.values()
    )


def _forward_transform(model: ProbabilityModel, values: np.ndarray) -> np.ndarray:
    """c[mask] = E[F * prod_{k in mask} Y_k] for every subset bitmask.

    Works on conditional values coordinate by coordinate: marginalizing gives
    q * lo + p * hi, and the Y_k-coefficient is sigma_k * (hi - lo) because
    Y_k(+1) - Y_k(-1) = 1/sigma_k.  The difference form makes coefficients of
    coordinates the table does not depend on exactly zero.
    """
    a = values.astype(float).copy()
    for k in range(model.size):
        p, q, sigma = model.p[k], model.q[k], model.sigma[k]
        a = a.reshape(-1, 2, 1 << k)
        lo = a[:, 0, :].copy()
        hi = a[:, 1, :]
        a[:, 0, :] = q * lo + p * hi
        a[:, 1, :] = sigma * (hi - lo)
        a = a.reshape(-1)
    return a


def _inverse_transform(model: ProbabilityModel, coeffs: np.ndarray) -> np.ndarray:
    """Values of sum_S c_S prod_{k in S} Y_k on every outcome bitmask."""
    a = coeffs.astype(float).copy()
    for k in range(model.size):
        ym, yp = model.y_minus(k + 1), model.y_plus(k + 1)
        a = a.reshape(-1, 2, 1 << k)
        without = a[:, 0, :].copy()
        with_k = a[:, 1, :].copy()
        a[:, 0, :] = without + with_k * ym
        a[:, 1, :] = without + with_k * yp
        a = a.reshape(-1)
    return a


def to_table(model: ProbabilityModel, expansion: ChaosExpansion) -> FunctionalTable:
    """Evaluate an expansion on all 2^N outcomes."""
    if expansion.max_order() > model.size:
        raise IndexOutOfRange(
            f"expansion holds order {expansion.max_order()} > N = {model.size}"
        )
    coeffs = np.zeros(model.num_outcomes)
    coeffs[0] = expansion.mean
    for order, kernel in expansion.kernels.items():
        _check_kernel_indices(model, kernel)
        scale = math.factorial(order)
        for key, value in kernel.entries.items():
            mask = 0
            for i in key:
                mask |= 1 << (i - 1)
            coeffs[mask] = scale * value
    return FunctionalTable(model, _inverse_transform(model, coeffs))


def decompose(model: ProbabilityModel, table: FunctionalTable) -> ChaosExpansion:
    """Unique chaos representation of a value table.

    Projects onto the orthonormal basis of Y-products: the coefficient at an
    increasing tuple S of size n is E[F * prod_{k in S} Y_k] / n!.
    """
    if table.values.shape != (model.num_outcomes,):
        raise LengthMismatch("table does not match the model")
    coeffs = _forward_transform(model, table.values)
    kernels: dict[int, dict] = {}
    for mask in range(1, model.num_outcomes):
        c = coeffs[mask]
        if c == 0.0:
            continue
        key = tuple(k + 1 for k in range(model.size) if (mask >> k) & 1)
        order = len(key)
        kernels.setdefault(order, {})[key] = c / math.factorial(order)
    return ChaosExpansion(
        float(coeffs[0]),
        {order: Kernel(order, entries) for order, entries in kernels.items()},
    )


def multiply(model: ProbabilityModel, f: Kernel, g: Kernel) -> ChaosExpansion:
    """Chaos expansion of the pointwise product J_n(f) * J_m(g).

    Sums r! C(n,r) C(m,r) C(r,l) times the symmetrized off-diagonal weighted
    contraction over r = 0..min(n,m), l = 0..r, grouping kernels of equal
    resulting order before storage.
    """
    n, m = f.order, g.order
    if n < 1 or m < 1:
        raise ValueError("product formula applies to orders >= 1")
    _check_kernel_indices(model, f)
    _check_kernel_indices(model, g)
    mean = 0.0
    kernels: dict[int, Kernel] = {}
    for r in range(0, min(n, m) + 1):
        for ell in range(0, r + 1):
            coeff = (
                math.factorial(r)
                * math.comb(n, r)
                * math.comb(m, r)
                * math.comb(r, ell)
            )
            part = sym_offdiag_weighted_contract(model, f, g, r, ell)
            if part.is_zero():
                continue
            order = part.order
            if order == 0:
                mean += coeff * part.entries.get((), 0.0)
            else:
                scaled = part.scaled(float(coeff))
                kernels[order] = (
                    kernel_add(kernels[order], scaled) if order in kernels else scaled
                )
    return ChaosExpansion(mean, {o: k for o, k in kernels.items() if not k.is_zero()})


def evaluate_on_signs(
    model: ProbabilityModel, expansion: ChaosExpansion, signs: np.ndarray
) -> np.ndarray:
    """Vectorized evaluation on a (rows, N) matrix of +-1 signs.

    Serves as the Monte Carlo evaluator for models beyond the enumeration cap.
    """
    signs = np.asarray(signs)
    if signs.ndim != 2 or signs.shape[1] != model.size:
        raise LengthMismatch("sign matrix must have one column per coordinate")
    y_plus = np.sqrt(model.q / model.p)
    y_minus = -np.sqrt(model.p / model.q)
    y = np.where(signs == 1, y_plus, y_minus)
    out = np.full(signs.shape[0], expansion.mean)
    for order, kernel in expansion.kernels.items():
        _check_kernel_indices(model, kernel)
        scale = math.factorial(order)
        for key, coeff in kernel.entries.items():
            prod = np.full(signs.shape[0], scale * coeff)
            for i in key:
                prod *= y[:, i - 1]
            out += prod
    return out


def covariance(model: ProbabilityModel, f: Kernel, g: Kernel) -> float:
    """E[J_n(f) J_m(g)]: n! <f, g> when orders agree, 0 otherwise."""
    _check_kernel_indices(model, f)
    _check_kernel_indices(model, g)
    if f.order != g.order:
        return 0.0
    return math.factorial(f.order) * inner_product(f, g)


def expansion_variance(expansion: ChaosExpansion) -> float:
    """Var of the represented functional: sum over orders of n! ||f_n||^2."""
    return stable_sum(
        math.factorial(order) * inner_product(kernel, kernel)
        for order, kernel in expansion.kernels.items()
    )
