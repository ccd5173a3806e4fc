"""Discrete Malliavin operators: gradient, divergence, L and its inverse.

The gradient has two interchangeable routes: pathwise, by flipping one
coordinate of the value table, and through the chaos expansion, by slicing
kernels.  Bound computations deliberately use the pathwise route so that the
chaos route stays available as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chaos import ChaosExpansion, decompose, to_table
from .errors import IndexOutOfRange, MalformedField
from .kernels import Kernel, slice_kernel
from .model import FunctionalTable, ProbabilityModel, expectation, stable_sum


def gradient_pathwise(model: ProbabilityModel, table: FunctionalTable, k: int) -> FunctionalTable:
    """D_k F = sqrt(p_k q_k) (F with omega_k = +1 minus F with omega_k = -1)."""
    model.check_index(k)
    bit = 1 << (k - 1)
    idx = np.arange(model.num_outcomes)
    plus = table.values[idx | bit]
    minus = table.values[idx & ~bit]
    return FunctionalTable(model, model.sigma[k - 1] * (plus - minus))


def gradient_chaos(expansion: ChaosExpansion, k: int) -> ChaosExpansion:
    """Chaos form of D_k: order n maps to n J_{n-1}(f_n(., k))."""
    if k < 1:
        raise IndexOutOfRange(f"index {k} is not positive")
    mean = 0.0
    kernels = {}
    for order, kernel in expansion.kernels.items():
        sliced = slice_kernel(kernel, k).scaled(float(order))
        if sliced.is_zero():
            continue
        if order == 1:
            mean = sliced.entries.get((), 0.0)
        else:
            kernels[order - 1] = sliced
    return ChaosExpansion(mean, kernels)


def iterated_gradient(model: ProbabilityModel, table: FunctionalTable, ks) -> FunctionalTable:
    """Right fold of single pathwise gradients; an empty index list returns F."""
    out = table
    for k in ks:
        out = gradient_pathwise(model, out, k)
    return out


def ou_operator(expansion: ChaosExpansion) -> ChaosExpansion:
    """L F = -sum_n n J_n(f_n); constants are annihilated."""
    return ChaosExpansion(
        0.0,
        {order: kernel.scaled(-float(order)) for order, kernel in expansion.kernels.items()},
    )


def pseudo_inverse(expansion: ChaosExpansion) -> ChaosExpansion:
    """L^{-1} applied to the centered part: -sum_n (1/n) J_n(f_n), mean 0."""
    return ChaosExpansion(
        0.0,
        {order: kernel.scaled(-1.0 / order) for order, kernel in expansion.kernels.items()},
    )


@dataclass(frozen=True, eq=False)
class GradientField:
    """A sequence u = (u_k), one chaos expansion per coordinate 1..N."""

    components: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "components", dict(sorted(self.components.items())))


def divergence(model: ProbabilityModel, u: GradientField) -> ChaosExpansion:
    """The adjoint of the gradient, assembled from component kernels.

    Reading u_k = sum_n J_{n-1}(f_n(., k)) recovers f_n on the slice through
    k; the divergence is sum_n J_n of the symmetrized, off-diagonal
    restriction of the assembled f_n.  Averaging over which argument carries k
    performs the symmetrization directly on increasing tuples.
    """
    raw: dict[int, dict] = {}
    for k, component in u.components.items():
        if not 1 <= int(k) <= model.size:
            raise MalformedField(f"component index {k} outside 1..{model.size}")
        if component.max_index() > model.size:
            raise MalformedField(
                f"component {k} references coordinate {component.max_index()} "
                f"beyond the model"
            )
        if component.max_order() >= model.size:
            raise MalformedField(
                f"component {k} holds order {component.max_order()}, so the "
                f"assembled kernel would exceed order N = {model.size}"
            )
        k = int(k)
        if component.mean != 0.0:
            raw.setdefault(1, {})[(k,)] = raw.get(1, {}).get((k,), 0.0) + component.mean
        for order, kernel in component.kernels.items():
            target = raw.setdefault(order + 1, {})
            for key, value in kernel.entries.items():
                if k in key:
                    continue  # diagonal position, masked away
                joined = tuple(sorted(key + (k,)))
                target[joined] = target.get(joined, 0.0) + value / (order + 1)
    return ChaosExpansion(0.0, {n: Kernel(n, entries) for n, entries in raw.items()})


def _as_table(model: ProbabilityModel, functional) -> FunctionalTable:
    if isinstance(functional, FunctionalTable):
        return functional
    return to_table(model, functional)


def minus_gradient_pseudo_inverse(
    model: ProbabilityModel, table: FunctionalTable
) -> list:
    """Tables of -D_k L^{-1}(F - E[F]) for k = 1..N, gradients by flipping."""
    inverse_table = to_table(model, pseudo_inverse(decompose(model, table)))
    return [
        FunctionalTable(
            model, -gradient_pathwise(model, inverse_table, k).values
        )
        for k in range(1, model.size + 1)
    ]


def check_integration_by_parts(model: ProbabilityModel, f, g) -> float:
    """|E[(F - E[F]) G] - E[<-D L^{-1}(F - E[F]), D G>]|, exact by enumeration."""
    table_f = _as_table(model, f)
    table_g = _as_table(model, g)
    mean_f = expectation(model, table_f)
    lhs = stable_sum(
        model.outcome_weights * (table_f.values - mean_f) * table_g.values
    )
    minus_dl = minus_gradient_pseudo_inverse(model, table_f)
    rhs = stable_sum(
        stable_sum(
            model.outcome_weights
            * minus_dl[k - 1].values
            * gradient_pathwise(model, table_g, k).values
        )
        for k in range(1, model.size + 1)
    )
    return abs(lhs - rhs)
