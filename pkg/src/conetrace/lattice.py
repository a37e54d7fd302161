"""Lattice sums over Z^n with Euler-Maclaurin tails for homogeneous terms.

A lattice point xi is the midpoint of the unit cell xi + [-1/2, 1/2]^n, so
for smooth G

    G(xi) = int_cell (T G),   T = 1 - Lap/24 + 7/5760 sum D_i^4 + 1/576 sum_{i<j} D_i^2 D_j^2

up to sixth derivatives. The cells of the box |xi|_inf <= R tile the cube
of half-side L = R + 1/2, and the sum over the lattice points outside the
box equals the (finite-part) integral of T G outside the cube. For G
homogeneous of degree c that integral has the closed form

    fp int_{|eta|_inf > L} G = -L^(c+n)/(c+n) * sum_faces int_face G dA    (c != -n)
                             = -sum_faces int_face G (log|eta| + log L) dA  (c = -n)

over the faces of the unit cube, computed by Gauss-Legendre quadrature.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

from .symbols import ScaledHomogeneous

FACE_NODES = 48


@lru_cache(maxsize=None)
def integer_box(n: int, R: int) -> np.ndarray:
    """All integer points with |xi|_inf <= R, lexicographic order."""
    ax = np.arange(-R, R + 1)
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    pts.setflags(write=False)
    return pts


def csum(values) -> complex:
    """Deterministic, correctly rounded sum of a complex array."""
    v = np.asarray(values, dtype=complex).ravel()
    return complex(math.fsum(v.real.tolist()), math.fsum(v.imag.tolist()))


def em_terms(h: ScaledHomogeneous) -> list:
    """Homogeneous pieces of T h (degrees c, c - 2, c - 4)."""
    n = h.dim
    if not h:
        return []
    d1 = [h.partial(i) for i in range(n)]
    d2 = [d1[i].partial(i) for i in range(n)]
    lap = d2[0]
    for t in d2[1:]:
        lap = lap + t
    fourth = None
    for i in range(n):
        t = d2[i].partial(i).partial(i).scale(Fraction(7, 5760))
        fourth = t if fourth is None else fourth + t
    for i in range(n):
        for j in range(i + 1, n):
            fourth = fourth + d2[i].partial(j).partial(j).scale(Fraction(1, 576))
    return [h, lap.scale(Fraction(-1, 24)), fourth]


@lru_cache(maxsize=None)
def _face_points(n: int, nodes: int):
    """Quadrature points on the 2n faces of [-1, 1]^n and their weights."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    pts, wts = [], []
    for i in range(n):
        for sgn in (-1.0, 1.0):
            for idx in product(range(nodes), repeat=n - 1):
                p = [t[k] for k in idx]
                p.insert(i, sgn)
                pts.append(p)
                wts.append(float(np.prod([w[k] for k in idx])))
    P = np.array(pts)
    W = np.array(wts)
    return P, W, np.log(np.sqrt(np.sum(P * P, axis=-1)))


def outer_finite_part(G: ScaledHomogeneous, L: float, nodes: int = FACE_NODES) -> complex:
    """Finite-part integral of homogeneous G over the complement of [-L, L]^n."""
    if not G:
        return 0j
    n = G.dim
    P, W, logr = _face_points(n, nodes)
    vals = G(P)
    c = float(G.degree)
    if G.degree == -n:
        return -complex(np.sum(W * vals * (logr + math.log(L))))
    return -(L ** (c + n)) / (c + n) * complex(np.sum(W * vals))


def tail_correction(h: ScaledHomogeneous, L: float) -> complex:
    """Sum over lattice points outside the box, via T h outside the cube."""
    return sum((outer_finite_part(G, L) for G in em_terms(h)), 0j)
