"""Writing a residue-free operator as a sum of commutators (n = 2).

Corrections Q_j come out of the pointwise bracket decomposition as grid
samples, so the remainder is tracked with a grid-level symbol calculus:
components are sampled on T^2 x S^1, x-derivatives are spectral and
xi-derivatives follow from homogeneity and the angular derivative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import InvalidInput, ToleranceNotMet, Unsupported
from .gaussian import frac_str, to_fraction
from .homog import HomogeneousFunction, ResidueValue
from .psido import TorusPsiDO, residue_trace
from .symbols import ScaledHomogeneous
from .symp import (ConeFunction, CosphereGrid, GridFunction, _on_grid, _spectral_derivative,
                   bracket_decompose_grid, spanning_set)


@dataclass
class GridSymbol:
    """Sampled classical symbol: degree -> values of shape (nx, nx, nphi)."""

    grid: CosphereGrid
    comps: dict = field(default_factory=dict)

    @classmethod
    def from_operator(cls, A: TorusPsiDO, grid, min_degree):
        out = cls(grid)
        for c in A.components:
            if c and c.degree >= min_degree:
                out.comps[c.degree] = _on_grid(c, grid)
        return out

    def add(self, degree, values):
        degree = to_fraction(degree)
        if degree in self.comps:
            self.comps[degree] = self.comps[degree] + values
        else:
            self.comps[degree] = np.array(values, dtype=complex)

    def __add__(self, other):
        out = GridSymbol(self.grid, {d: v.copy() for d, v in self.comps.items()})
        for d, v in other.comps.items():
            out.add(d, v)
        return out

    def scale(self, c):
        return GridSymbol(self.grid, {d: c * v for d, v in self.comps.items()})

    def __sub__(self, other):
        return self + other.scale(-1)

    def component(self, d):
        d = to_fraction(d)
        v = self.comps.get(d)
        return np.zeros(self.grid.shape(), dtype=complex) if v is None else v

    def sup_norms(self):
        return {d: float(np.max(np.abs(v))) for d, v in sorted(self.comps.items(), reverse=True)}


def _d_xi_alpha(v, degree, alpha, grid):
    for i, k in enumerate(alpha):
        for _ in range(k):
            v = GridFunction(grid, v, degree).d_xi(i)
            degree -= 1
    return v


def _D_x_alpha(v, alpha):
    for i, k in enumerate(alpha):
        for _ in range(k):
            v = -1j * _spectral_derivative(v, i)
    return v


def _alphas(t):
    return [(a, t - a) for a in range(t + 1)]


def grid_compose(P: GridSymbol, Q: GridSymbol, min_degree) -> GridSymbol:
    """sum_alpha (1/alpha!) d_xi^alpha p D_x^alpha q, kept down to ``min_degree``."""
    out = GridSymbol(P.grid)
    for dp, p in P.comps.items():
        for dq, q in Q.comps.items():
            t = 0
            while dp + dq - t >= min_degree:
                for alpha in _alphas(t):
                    w = 1.0 / (factorial(alpha[0]) * factorial(alpha[1]))
                    term = _d_xi_alpha(p, dp, alpha, P.grid) * _D_x_alpha(q, alpha)
                    out.add(dp + dq - t, w * term)
                t += 1
    return out


def grid_commutator(P, Q, min_degree):
    return grid_compose(P, Q, min_degree) - grid_compose(Q, P, min_degree)


@dataclass
class CommutatorRepresentation:
    P: list
    Q: list
    res_coeff: ResidueValue
    remainder: GridSymbol
    level_errors: dict
    order: Fraction

    def __iter__(self):
        return iter((self.P, self.Q, self.res_coeff, self.remainder))


def commutator_representation(A: TorusPsiDO, m, J=2, grid=None, tol=1e-4):
    """A = sum_j [P_j, Q_j] + Res(A) Q0 + remainder, remainder vanishing through J orders.

    P_j = Op(chi g_j) for the spanning set of degree m; the Q_j are grid
    symbols accumulated level by level from bracket decompositions of
    i times the current leading remainder.

    Raises
    ------
    ToleranceNotMet
        ``achieved`` lists the relative sup-norm error per level.
    ResidueLeak
        From a degree -2 level whose sampled residue exceeds ``tol``.
    """
    if A.dim != 2:
        raise Unsupported("commutator representation is implemented for n = 2")
    m = to_fraction(m)
    if m == 0:
        raise Unsupported("spanning sets of degree 0 are not supported here")
    if J > A.depth + 1:
        raise InvalidInput("J exceeds the depth of A")
    grid = CosphereGrid.parse(grid)
    n = 2
    gs = spanning_set(n, m)
    Pops = [TorusPsiDO.from_symbol(g) for g in gs]
    res = residue_trace(A)
    A1 = A
    if not res.is_zero():
        c = A.symbol_of_degree(-n).zero_mode().constant_part()
        f = ScaledHomogeneous.of(HomogeneousFunction.radial(n, -n)).scale(c)
        A1 = A - TorusPsiDO.from_symbol(ConeFunction.fiber(f))
    A1 = A1.trimmed()
    a = A1.order
    levels = [a - l for l in range(J)]
    if A1.is_smoothing():
        zero = GridSymbol(grid)
        return CommutatorRepresentation(Pops, [GridSymbol(grid) for _ in gs], res, zero,
                                        {frac_str(d): 0.0 for d in levels}, a)
    min_degree = a - J + 1
    target = GridSymbol.from_operator(A1, grid, min_degree)
    scale = max(max(target.sup_norms().values(), default=0.0), 1e-300)
    Pg = [GridSymbol(grid, {m: _on_grid(g, grid)}) for g in gs]
    Qg = [GridSymbol(grid) for _ in gs]
    rem = target
    for d in levels:
        S = rem.component(d)
        if float(np.max(np.abs(S))) <= 1e-15 * scale:
            continue
        pairs, _ = bracket_decompose_grid(GridFunction(grid, 1j * S, d), m, tol=np.inf,
                                          residue_tol=tol)
        qdeg = d - m + 1
        for j, (_, F) in enumerate(pairs):
            Qg[j].add(qdeg, F.values)
        acc = GridSymbol(grid)
        for P, Q in zip(Pg, Qg):
            acc = acc + grid_commutator(P, Q, min_degree)
        rem = target - acc
    errs = {frac_str(d): float(np.max(np.abs(rem.component(d)))) / scale for d in levels}
    out = CommutatorRepresentation(Pops, Qg, res, rem, errs, a)
    worst = max(errs.values(), default=0.0)
    if worst > tol:
        raise ToleranceNotMet(f"remainder level errors {errs} exceed tol {tol:.1e}",
                              achieved=errs)
    return out
