"""Sparse multivariate polynomials with Gaussian-rational coefficients.

A polynomial is a map from exponent tuples to nonzero coefficients. The
harmonic decomposition used to put homogeneous functions into canonical form
lives here as well.
"""
from __future__ import annotations

import math
from functools import lru_cache
from fractions import Fraction
from math import factorial

import numpy as np

from .gaussian import GaussRational, gq
from .errors import InvalidInput

_ZERO = GaussRational(0)


class Poly:
    """Sparse polynomial in ``n`` variables.

    Parameters
    ----------
    n : int
        Number of variables.
    terms : dict
        Map from exponent tuples of length ``n`` to coefficients.
    """

    __slots__ = ("n", "terms", "_hash", "_num")

    def __init__(self, n: int, terms=None):
        self.n = n
        clean = {}
        if terms:
            for e, c in terms.items():
                c = gq(c)
                if c:
                    if len(e) != n:
                        raise InvalidInput(f"exponent {e} has wrong length for n={n}")
                    clean[tuple(e)] = c
        self.terms = clean
        self._hash = None
        self._num = None

    @classmethod
    def _raw(cls, n, terms):
        p = cls.__new__(cls)
        p.n = n
        p.terms = terms
        p._hash = None
        p._num = None
        return p

    # constructors
    @classmethod
    def zero(cls, n):
        return cls._raw(n, {})

    @classmethod
    def const(cls, n, c=1):
        c = gq(c)
        return cls._raw(n, {(0,) * n: c} if c else {})

    @classmethod
    def var(cls, n, j, c=1):
        e = [0] * n
        e[j] = 1
        return cls._raw(n, {tuple(e): gq(c)})

    @classmethod
    def monomial(cls, n, exps, c=1):
        return cls(n, {tuple(exps): c})

    @classmethod
    def r2(cls, n):
        """The polynomial |xi|^2."""
        terms = {}
        for j in range(n):
            e = [0] * n
            e[j] = 2
            terms[tuple(e)] = GaussRational(1)
        return cls._raw(n, terms)

    # structure
    def is_zero(self):
        return not self.terms

    def degrees(self):
        return {sum(e) for e in self.terms}

    def is_homogeneous(self, d=None):
        ds = self.degrees()
        if not ds:
            return True
        if len(ds) != 1:
            return False
        return d is None or ds == {d}

    def degree(self):
        ds = self.degrees()
        return max(ds) if ds else -1

    def homogeneous_parts(self):
        parts = {}
        for e, c in self.terms.items():
            parts.setdefault(sum(e), {})[e] = c
        return {d: Poly._raw(self.n, t) for d, t in parts.items()}

    def coefficient(self, exps):
        return self.terms.get(tuple(exps), _ZERO)

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(self.n, other)
        _check_n(self, other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v = v + c
                if v:
                    out[e] = v
                else:
                    del out[e]
        return Poly._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(self.n, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = gq(c)
        if not c:
            return Poly.zero(self.n)
        return Poly._raw(self.n, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        _check_n(self, other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e)
                out[e] = c1 * c2 if v is None else v + c1 * c2
        return Poly._raw(self.n, {e: c for e, c in out.items() if c})

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k):
        out = Poly.const(self.n, 1)
        for _ in range(k):
            out = out * self
        return out

    def diff(self, j):
        out = {}
        for e, c in self.terms.items():
            if e[j]:
                f = list(e)
                f[j] -= 1
                out[tuple(f)] = c * e[j]
        return Poly._raw(self.n, out)

    def laplacian(self):
        out = Poly.zero(self.n)
        for j in range(self.n):
            out = out + self.diff(j).diff(j)
        return out

    def times_var(self, j):
        out = {}
        for e, c in self.terms.items():
            f = list(e)
            f[j] += 1
            out[tuple(f)] = c
        return Poly._raw(self.n, out)

    def conjugate(self):
        return Poly._raw(self.n, {e: c.conjugate() for e, c in self.terms.items()})

    def substitute_linear(self, images):
        """Compose with a linear change of variables given as a list of Polys."""
        out = Poly.zero(len(images) and images[0].n)
        for e, c in self.terms.items():
            t = Poly.const(out.n, c)
            for j, k in enumerate(e):
                for _ in range(k):
                    t = t * images[j]
            out = out + t
        return out

    # comparison
    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.n == other.n and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self.terms.items())))
        return self._hash

    # evaluation
    def _numeric(self):
        if self._num is None:
            if self.terms:
                exps = np.array(list(self.terms.keys()), dtype=np.int64)
                coef = np.array([complex(c) for c in self.terms.values()])
            else:
                exps = np.zeros((0, self.n), dtype=np.int64)
                coef = np.zeros(0, dtype=complex)
            self._num = (exps, coef)
        return self._num

    def __call__(self, xi):
        """Evaluate at points ``xi`` of shape (..., n) with numpy."""
        xi = np.asarray(xi, dtype=float)
        exps, coef = self._numeric()
        out = np.zeros(xi.shape[:-1], dtype=complex)
        if not len(coef):
            return out
        maxd = int(exps.max()) if exps.size else 0
        cache = []
        for j in range(self.n):
            col = [np.ones(xi.shape[:-1])]
            for _ in range(maxd):
                col.append(col[-1] * xi[..., j])
            cache.append(col)
        for e, c in zip(exps, coef):
            t = c
            for j in range(self.n):
                if e[j]:
                    t = t * cache[j][e[j]]
            out = out + t
        return out

    def eval_mp(self, xi):
        """Evaluate at a single point given as a sequence of mpmath numbers."""
        import mpmath
        s = mpmath.mpc(0)
        for e, c in self.terms.items():
            t = c.to_mpc()
            for j, k in enumerate(e):
                if k:
                    t = t * xi[j] ** k
            s += t
        return s

    def abs_bound(self) -> Fraction:
        """Upper bound for |P| on the unit sphere."""
        return sum((c.abs_bound() for c in self.terms.values()), Fraction(0))

    def sphere_mean(self) -> GaussRational:
        """Exact mean of P over the unit sphere S^{n-1}."""
        tot = GaussRational(0)
        for e, c in self.terms.items():
            m = sphere_moment(e)
            if m:
                tot = tot + c * m
        return tot

    # serialization
    def to_json(self):
        return {",".join(map(str, e)): c.to_json() for e, c in sorted(self.terms.items())}

    @classmethod
    def from_json(cls, n, obj):
        terms = {}
        for k, v in obj.items():
            e = tuple(int(t) for t in k.split(",")) if k else ()
            if len(e) != n:
                raise InvalidInput(f"multi-index {k!r} does not have {n} entries")
            terms[e] = GaussRational.from_json(v)
        return cls(n, terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items()):
            mono = "*".join(f"x{j + 1}^{k}" if k > 1 else f"x{j + 1}"
                            for j, k in enumerate(e) if k)
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts)


def _check_n(p, q):
    if p.n != q.n:
        raise InvalidInput(f"dimension mismatch {p.n} vs {q.n}")


@lru_cache(maxsize=None)
def _r2_power(n, k):
    if k == 0:
        return Poly.const(n, 1)
    return _r2_power(n, k - 1) * Poly.r2(n)


def r2_power(n, k):
    return _r2_power(n, k)


def _double_factorial(m):
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


@lru_cache(maxsize=None)
def sphere_moment(exps) -> Fraction:
    """Mean of xi^alpha over the unit sphere, exactly.

    For all-even alpha the mean is prod (alpha_i - 1)!! / (n (n+2) ... (n + |alpha| - 2)).
    """
    if any(k % 2 for k in exps):
        return Fraction(0)
    n = len(exps)
    num = 1
    for k in exps:
        num *= _double_factorial(k - 1)
    den = 1
    d = sum(exps)
    for i in range(0, d, 2):
        den *= n + i
    return Fraction(num, den)


def harmonic_projection(P: Poly, d: int) -> tuple[Poly, Poly]:
    """Split P (homogeneous of degree d) as H + |xi|^2 Q with H harmonic."""
    n = P.n
    H = P
    Q = Poly.zero(n)
    lap = P
    den = Fraction(1)
    for j in range(1, d // 2 + 1):
        lap = lap.laplacian()
        if lap.is_zero():
            break
        den *= 2 * j * (n + 2 * d - 2 - 2 * j)
        c = Fraction((-1) ** j) / den
        H = H + (r2_power(n, j) * lap).scale(c)
        Q = Q + (r2_power(n, j - 1) * lap).scale(-c)
    return H, Q


def _decompose_direct(P: Poly, d: int) -> list[Poly]:
    out = []
    cur = P
    deg = d
    while deg >= 0:
        H, Q = harmonic_projection(cur, deg)
        out.append(H)
        cur = Q
        deg -= 2
        if cur.is_zero():
            break
    return out


@lru_cache(maxsize=None)
def _monomial_decomposition(exps: tuple) -> tuple:
    """Harmonic decomposition of one monomial as (denominator, integer numerators) per level."""
    n, d = len(exps), sum(exps)
    parts = _decompose_direct(Poly._raw(n, {exps: GaussRational(1)}), d)
    out = []
    for H in parts:
        D = 1
        for c in H.terms.values():
            D = math.lcm(D, c.re.denominator)
        out.append((D, tuple((e, int(c.re * D)) for e, c in H.terms.items())))
    return tuple(out)


def harmonic_decompose(P: Poly, d: int | None = None) -> list[Poly]:
    """Harmonic decomposition P = sum_m |xi|^{2m} H_{d-2m}.

    Returns the list ``[H_d, H_{d-2}, ...]``; entry m has degree d - 2m.
    The decomposition is linear, so it is assembled from cached
    decompositions of the monomials of P, with integer accumulation over a
    common denominator.
    """
    if d is None:
        ds = P.degrees()
        if len(ds) > 1:
            raise InvalidInput("polynomial is not homogeneous")
        d = ds.pop() if ds else 0
    elif not P.is_homogeneous(d):
        raise InvalidInput(f"polynomial is not homogeneous of degree {d}")
    n = P.n
    if not P.terms:
        return [Poly.zero(n)]
    L = 1
    for c in P.terms.values():
        L = math.lcm(L, c.re.denominator, c.im.denominator)
    coeffs = [(e, int(c.re * L), int(c.im * L)) for e, c in P.terms.items()]
    decs = [_monomial_decomposition(e) for e, _, _ in coeffs]
    levels = max(len(t) for t in decs)
    out = []
    for m in range(levels):
        Dm = 1
        for t in decs:
            if m < len(t):
                Dm = math.lcm(Dm, t[m][0])
        re, im = {}, {}
        for (_, cr, ci), t in zip(coeffs, decs):
            if m >= len(t):
                continue
            D, mono = t[m]
            f = Dm // D
            fr, fi = cr * f, ci * f
            for e2, N in mono:
                if fr:
                    re[e2] = re.get(e2, 0) + fr * N
                if fi:
                    im[e2] = im.get(e2, 0) + fi * N
        den = L * Dm
        terms = {}
        for e in set(re) | set(im):
            r, i = re.get(e, 0), im.get(e, 0)
            if r or i:
                terms[e] = GaussRational(Fraction(r, den), Fraction(i, den))
        out.append(Poly._raw(n, terms))
    while len(out) > 1 and out[-1].is_zero():
        out.pop()
    return out


def recombine(parts: list[Poly]) -> Poly:
    if not parts:
        raise InvalidInput("empty decomposition")
    n = parts[0].n
    out = Poly.zero(n)
    for m, H in enumerate(parts):
        out = out + r2_power(n, m) * H
    return out


def monomials(n, d):
    """All exponent tuples of total degree d in n variables."""
    if n == 1:
        yield (d,)
        return
    for k in range(d, -1, -1):
        for rest in monomials(n - 1, d - k):
            yield (k,) + rest


def multinomial(alpha) -> int:
    out = factorial(sum(alpha))
    for a in alpha:
        out //= factorial(a)
    return out


