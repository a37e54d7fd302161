"""Homogeneous and log-polyhomogeneous functions on R^n minus the origin.

A homogeneous function of degree ``a`` is stored as a finite sum

    f(xi) = sum_k H_k(xi) |xi|^(a - k)

with each ``H_k`` a harmonic polynomial of degree ``k``. The harmonic
decomposition makes this representation canonical, so equality of values is
equality of coefficient maps.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import DegreeMismatch, InvalidInput, ResidueObstruction
from .gaussian import GaussRational, gq, to_fraction, frac_str
from .poly import Poly, harmonic_decompose


def sphere_area(n, dps=None):
    """Area of the unit sphere S^{n-1}: 2 pi^{n/2} / Gamma(n/2)."""
    with mpmath.workdps(dps or mpmath.mp.dps):
        half = mpmath.mpf(n) / 2
        return 2 * mpmath.power(mpmath.pi, half) / mpmath.gamma(half)


def _check_dim(n):
    if not isinstance(n, int) or n < 2:
        raise InvalidInput(f"dimension must be an integer >= 2, got {n!r}")


class HomogeneousFunction:
    """Exact homogeneous function of rational degree on R^n minus the origin.

    Parameters
    ----------
    dim : int
        Ambient dimension n >= 2.
    degree : rational
        Homogeneity degree a.
    terms : dict
        Map k -> harmonic polynomial ``H_k`` of degree k.
    check : bool
        Verify homogeneity and harmonicity of the supplied terms.
    """

    __slots__ = ("dim", "degree", "terms", "_hash", "_numcache")

    def __init__(self, dim, degree, terms=None, check=True):
        _check_dim(dim)
        self.dim = dim
        self.degree = to_fraction(degree)
        clean = {}
        for k, H in (terms or {}).items():
            if H.is_zero():
                continue
            if check:
                if H.n != dim or not H.is_homogeneous(k):
                    raise InvalidInput(f"term {k} is not homogeneous of degree {k}")
                if not H.laplacian().is_zero():
                    raise InvalidInput(f"term {k} is not harmonic")
            clean[int(k)] = H
        self.terms = clean
        self._hash = None
        self._numcache = None

    @classmethod
    def _make(cls, dim, degree, terms):
        f = cls.__new__(cls)
        f.dim = dim
        f.degree = degree
        f.terms = {k: H for k, H in terms.items() if not H.is_zero()}
        f._hash = None
        f._numcache = None
        return f

    # constructors
    @classmethod
    def from_raw(cls, dim, degree, polys):
        """Normalize ``sum_P P |xi|^(degree - deg P)`` into canonical form.

        ``polys`` is an iterable of polynomials; each homogeneous part of
        degree d is paired with |xi|^(degree - d).
        """
        degree = to_fraction(degree)
        by_degree = {}
        for P in polys:
            for d, Pd in P.homogeneous_parts().items():
                by_degree[d] = by_degree[d] + Pd if d in by_degree else Pd
        acc = {}
        for d, Pd in by_degree.items():
            for m, H in enumerate(harmonic_decompose(Pd, d)):
                if H.is_zero():
                    continue
                k = d - 2 * m
                acc[k] = acc[k] + H if k in acc else H
        return cls._make(dim, degree, acc)

    @classmethod
    def zero(cls, dim, degree=0):
        _check_dim(dim)
        return cls._make(dim, to_fraction(degree), {})

    @classmethod
    def radial(cls, dim, s, c=1):
        """c |xi|^s."""
        _check_dim(dim)
        return cls._make(dim, to_fraction(s), {0: Poly.const(dim, c)})

    @classmethod
    def constant(cls, dim, c=1):
        return cls.radial(dim, 0, c)

    @classmethod
    def coordinate(cls, dim, j):
        """The coordinate function xi_j (0-based index)."""
        _check_dim(dim)
        return cls._make(dim, Fraction(1), {1: Poly.var(dim, j)})

    @classmethod
    def from_poly(cls, P, s=0):
        """P(xi) |xi|^s for a homogeneous polynomial P."""
        _check_dim(P.n)
        ds = P.degrees()
        if len(ds) > 1:
            raise InvalidInput("polynomial factor must be homogeneous")
        d = ds.pop() if ds else 0
        return cls.from_raw(P.n, d + to_fraction(s), [P])

    # basic structure
    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def constant_harmonic_coefficient(self) -> GaussRational:
        H = self.terms.get(0)
        return H.coefficient((0,) * self.dim) if H is not None else GaussRational(0)

    def max_harmonic_degree(self):
        return max(self.terms) if self.terms else -1

    def term(self, k):
        """The k-th harmonic term as its own homogeneous function."""
        H = self.terms.get(k)
        if H is None:
            return HomogeneousFunction.zero(self.dim, self.degree)
        return HomogeneousFunction._make(self.dim, self.degree, {k: H})

    # arithmetic
    def _compatible(self, other):
        if not isinstance(other, HomogeneousFunction):
            raise TypeError("expected a HomogeneousFunction")
        if other.dim != self.dim:
            raise InvalidInput(f"dimension mismatch {self.dim} vs {other.dim}")
        if other.degree != self.degree:
            raise DegreeMismatch(
                f"cannot add degrees {frac_str(self.degree)} and {frac_str(other.degree)}")

    def __add__(self, other):
        self._compatible(other)
        out = dict(self.terms)
        for k, H in other.terms.items():
            out[k] = out[k] + H if k in out else H
        return HomogeneousFunction._make(self.dim, self.degree, out)

    def __neg__(self):
        return HomogeneousFunction._make(self.dim, self.degree,
                                         {k: -H for k, H in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = gq(c)
        if not c:
            return HomogeneousFunction.zero(self.dim, self.degree)
        return HomogeneousFunction._make(self.dim, self.degree,
                                         {k: H.scale(c) for k, H in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, HomogeneousFunction):
            return self.scale(other)
        if other.dim != self.dim:
            raise InvalidInput("dimension mismatch")
        deg = self.degree + other.degree
        raw = [H * G for H in self.terms.values() for G in other.terms.values()]
        return HomogeneousFunction.from_raw(self.dim, deg, raw)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, c):
        return self.scale(GaussRational(1) / gq(c))

    def times_radial(self, s):
        """Multiply by |xi|^s."""
        return HomogeneousFunction._make(self.dim, self.degree + to_fraction(s), self.terms)

    def times_coordinate(self, j):
        """Multiply by xi_j."""
        raw = [H.times_var(j) for H in self.terms.values()]
        return HomogeneousFunction.from_raw(self.dim, self.degree + 1, raw)

    def conjugate(self):
        return HomogeneousFunction._make(self.dim, self.degree,
                                         {k: H.conjugate() for k, H in self.terms.items()})

    def partial(self, j):
        """Exact partial derivative in xi_j (0-based)."""
        a = self.degree
        raw = []
        for k, H in self.terms.items():
            dH = H.diff(j)
            if not dH.is_zero():
                raw.append(dH)
            s = a - k
            if s != 0:
                raw.append(H.times_var(j).scale(s))
        return HomogeneousFunction.from_raw(self.dim, a - 1, raw)

    def gradient(self):
        return [self.partial(j) for j in range(self.dim)]

    def euler(self):
        """sum_j xi_j d_j f, computed through the derivative rule."""
        out = HomogeneousFunction.zero(self.dim, self.degree)
        for j in range(self.dim):
            out = out + self.partial(j).times_coordinate(j)
        return out

    def laplacian(self):
        out = HomogeneousFunction.zero(self.dim, self.degree - 2)
        for j in range(self.dim):
            out = out + self.partial(j).partial(j)
        return out

    # comparison
    def __eq__(self, other):
        if not isinstance(other, HomogeneousFunction):
            return NotImplemented
        return (self.dim == other.dim and self.degree == other.degree
                and self.terms == other.terms)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, self.degree, frozenset(self.terms.items())))
        return self._hash

    # evaluation
    def __call__(self, xi):
        """Evaluate at points of shape (..., n) with complex doubles."""
        xi = np.asarray(xi, dtype=float)
        r = np.sqrt(np.sum(xi * xi, axis=-1))
        out = np.zeros(xi.shape[:-1], dtype=complex)
        a = float(self.degree)
        for k, H in self.terms.items():
            out = out + H(xi) * r ** (a - k)
        return out

    def eval_mp(self, xi):
        """Evaluate at one point given as mpmath numbers."""
        r = mpmath.sqrt(sum(x * x for x in xi))
        a = mpmath.mpf(self.degree.numerator) / self.degree.denominator
        s = mpmath.mpc(0)
        for k, H in self.terms.items():
            s += H.eval_mp(xi) * r ** (a - k)
        return s

    def sphere_bound(self) -> Fraction:
        """Upper bound for |f| on the unit sphere."""
        return sum((H.abs_bound() for H in self.terms.values()), Fraction(0))

    # serialization
    def to_json(self):
        return {"dim": self.dim, "degree": frac_str(self.degree),
                "terms": {str(k): H.to_json() for k, H in sorted(self.terms.items())}}

    @classmethod
    def from_json(cls, obj):
        try:
            dim = int(obj["dim"])
            degree = to_fraction(str(obj["degree"]))
            raw = obj.get("terms", {})
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"bad homogeneous function record: {exc}") from exc
        polys = []
        for k, t in raw.items():
            P = Poly.from_json(dim, t)
            if not P.is_homogeneous(int(k)):
                raise InvalidInput(f"term {k} is not homogeneous of degree {k}")
            polys.append(P)
        # terms may be given as arbitrary homogeneous polynomials; normalize
        return cls.from_raw(dim, degree, polys)

    def __repr__(self):
        if not self.terms:
            return f"HomogeneousFunction(n={self.dim}, degree={frac_str(self.degree)}, 0)"
        body = " + ".join(f"[{H}]*|xi|^({frac_str(self.degree - k)})"
                          for k, H in sorted(self.terms.items()))
        return f"HomogeneousFunction(n={self.dim}, degree={frac_str(self.degree)}, {body})"


def harmonic_decomposition(P: Poly):
    """Harmonic decomposition of a homogeneous polynomial.

    Returns ``[H_d, H_{d-2}, ...]`` with ``P = sum_m |xi|^{2m} H_{d-2m}``.
    """
    ds = P.degrees()
    if len(ds) > 1:
        raise InvalidInput("input polynomial is not homogeneous")
    d = ds.pop() if ds else 0
    return harmonic_decompose(P, d)


@dataclass(frozen=True)
class ResidueValue:
    """Exact residue ``sum_h q_h pi^(h/2) Area_n``.

    Most residues have a single part with h = 0, i.e. value ``q * Area_n``.
    """

    dim: int
    parts: tuple = field(default=())

    @classmethod
    def of(cls, dim, q, pi_half_power=0):
        q = gq(q)
        return cls(dim, ((pi_half_power, q),) if q else ())

    @property
    def q(self) -> GaussRational:
        """Rational coefficient against Area_n (requires a single h = 0 part)."""
        if not self.parts:
            return GaussRational(0)
        if len(self.parts) == 1 and self.parts[0][0] == 0:
            return self.parts[0][1]
        raise ValueError("residue carries transcendental factors beyond Area_n")

    def is_zero(self):
        return not self.parts

    def __add__(self, other):
        if other == 0:
            return self
        acc = dict(self.parts)
        for h, q in other.parts:
            acc[h] = acc.get(h, GaussRational(0)) + q
        return ResidueValue(self.dim, tuple(sorted((h, q) for h, q in acc.items() if q)))

    def scale(self, c, pi_half_power=0):
        c = gq(c)
        return ResidueValue(self.dim, tuple((h + pi_half_power, q * c)
                                            for h, q in self.parts if q * c))

    def value(self, dps=None):
        with mpmath.workdps(dps or mpmath.mp.dps):
            area = sphere_area(self.dim)
            s = mpmath.mpc(0)
            for h, q in self.parts:
                s += q.to_mpc() * mpmath.power(mpmath.pi, mpmath.mpf(h) / 2)
            return +(s * area)

    def __complex__(self):
        return complex(self.value())

    def __float__(self):
        v = self.value()
        if mpmath.im(v) != 0:
            raise TypeError("residue is not real")
        return float(mpmath.re(v))

    def render(self, digits=30):
        with mpmath.workdps(digits + 5):
            v = self.value()
            re_s = mpmath.nstr(mpmath.re(v), digits)
            if mpmath.im(v) == 0:
                return re_s
            return f"{re_s}{'+' if mpmath.im(v) >= 0 else '-'}{mpmath.nstr(abs(mpmath.im(v)), digits)}i"

    def to_json(self, digits=30):
        return {"exact": [[h, q.to_json()] for h, q in self.parts],
                "unit": f"Area_{self.dim}", "value": self.render(digits)}


def residue(f: HomogeneousFunction) -> ResidueValue:
    """Residue of a homogeneous function against the standard volume form.

    Zero unless the degree equals -n; otherwise the constant-harmonic
    coefficient times the sphere area. Harmonic terms of positive degree
    integrate to zero over the sphere.
    """
    if f.degree != -f.dim:
        return ResidueValue(f.dim)
    return ResidueValue.of(f.dim, f.constant_harmonic_coefficient())


def divergence(sigma):
    out = sigma[0].partial(0)
    for j in range(1, len(sigma)):
        out = out + sigma[j].partial(j)
    return out


def decompose_derivatives(f: HomogeneousFunction) -> list[HomogeneousFunction]:
    """Write f = sum_j d_j sigma_j with sigma_j homogeneous of degree a+1.

    Raises
    ------
    ResidueObstruction
        When a = -n and the residue of f is nonzero.
    """
    n, a = f.dim, f.degree
    if a != -n:
        return [f.times_coordinate(j) / (a + n) for j in range(n)]
    if f.constant_harmonic_coefficient():
        raise ResidueObstruction(
            f"f has degree -{n} and residue {residue(f).render(12)} != 0; "
            "no homogeneous sigma with f = sum_j d_j sigma_j exists")
    sigma = [HomogeneousFunction.zero(n, a + 1) for _ in range(n)]
    for k, H in f.terms.items():
        s = 2 - n - k
        c = Fraction(1, k * s)
        for j in range(n):
            dH = H.diff(j)
            if dH.is_zero():
                continue
            sigma[j] = sigma[j] + HomogeneousFunction.from_raw(n, a + 1, [dH.scale(c)])
    return sigma


# log-polyhomogeneous functions
class LogHomogeneousFunction:
    """Sum_j f_j(xi) log^j |xi| with f_j homogeneous of a common degree."""

    __slots__ = ("dim", "degree", "parts")

    def __init__(self, parts, dim=None, degree=None):
        parts = list(parts)
        if not parts:
            if dim is None or degree is None:
                raise InvalidInput("empty part list needs dim and degree")
            parts = [HomogeneousFunction.zero(dim, degree)]
        dim = parts[0].dim if dim is None else dim
        degree = parts[0].degree if degree is None else to_fraction(degree)
        for p in parts:
            if p.dim != dim or p.degree != degree:
                raise DegreeMismatch("all log parts must share dimension and degree")
        self.dim = dim
        self.degree = degree
        self.parts = tuple(parts)

    @property
    def log_depth(self):
        return len(self.parts) - 1

    @classmethod
    def zero(cls, dim, degree, depth=0):
        z = HomogeneousFunction.zero(dim, degree)
        return cls([z] * (depth + 1))

    @classmethod
    def single(cls, f: HomogeneousFunction, power, depth=None):
        depth = power if depth is None else depth
        if power > depth:
            raise InvalidInput("log power exceeds depth")
        z = HomogeneousFunction.zero(f.dim, f.degree)
        return cls([f if j == power else z for j in range(depth + 1)])

    def top(self):
        return self.parts[-1]

    def with_depth(self, k):
        if k < self.log_depth:
            if any(not p.is_zero() for p in self.parts[k + 1:]):
                raise InvalidInput("cannot truncate nonzero log parts")
            return LogHomogeneousFunction(self.parts[:k + 1])
        z = HomogeneousFunction.zero(self.dim, self.degree)
        return LogHomogeneousFunction(list(self.parts) + [z] * (k - self.log_depth))

    def is_zero(self):
        return all(p.is_zero() for p in self.parts)

    def _align(self, other):
        k = max(self.log_depth, other.log_depth)
        return self.with_depth(k), other.with_depth(k)

    def __add__(self, other):
        a, b = self._align(other)
        return LogHomogeneousFunction([x + y for x, y in zip(a.parts, b.parts)])

    def __neg__(self):
        return LogHomogeneousFunction([-p for p in self.parts])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return LogHomogeneousFunction([p.scale(c) for p in self.parts])

    def __truediv__(self, c):
        return self.scale(GaussRational(1) / gq(c))

    def __mul__(self, other):
        if isinstance(other, HomogeneousFunction):
            return LogHomogeneousFunction([p * other for p in self.parts])
        if isinstance(other, LogHomogeneousFunction):
            k = self.log_depth + other.log_depth
            deg = self.degree + other.degree
            acc = [HomogeneousFunction.zero(self.dim, deg) for _ in range(k + 1)]
            for i, p in enumerate(self.parts):
                for j, q in enumerate(other.parts):
                    if p and q:
                        acc[i + j] = acc[i + j] + p * q
            return LogHomogeneousFunction(acc)
        return self.scale(other)

    def times_coordinate(self, j):
        return LogHomogeneousFunction([p.times_coordinate(j) for p in self.parts])

    def times_radial(self, s):
        return LogHomogeneousFunction([p.times_radial(s) for p in self.parts])

    def partial(self, j):
        """d_j(f_m log^m) = (d_j f_m) log^m + m f_m xi_j |xi|^-2 log^(m-1)."""
        k = self.log_depth
        out = [p.partial(j) for p in self.parts]
        for m in range(1, k + 1):
            p = self.parts[m]
            if p:
                out[m - 1] = out[m - 1] + p.times_coordinate(j).times_radial(-2).scale(m)
        return LogHomogeneousFunction(out, self.dim, self.degree - 1)

    def euler(self):
        out = LogHomogeneousFunction.zero(self.dim, self.degree, self.log_depth)
        for j in range(self.dim):
            out = out + self.partial(j).times_coordinate(j)
        return out

    def __eq__(self, other):
        if not isinstance(other, LogHomogeneousFunction):
            return NotImplemented
        if self.dim != other.dim or self.degree != other.degree:
            return False
        a, b = self._align(other)
        return a.parts == b.parts

    def __hash__(self):
        k = self.log_depth
        while k > 0 and self.parts[k].is_zero():
            k -= 1
        return hash((self.dim, self.degree, self.parts[:k + 1]))

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        L = np.log(np.sqrt(np.sum(xi * xi, axis=-1)))
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for m, p in enumerate(self.parts):
            if p:
                out = out + p(xi) * L ** m
        return out

    def to_json(self):
        return {"dim": self.dim, "degree": frac_str(self.degree),
                "parts": [p.to_json()["terms"] for p in self.parts]}

    @classmethod
    def from_json(cls, obj):
        dim = int(obj["dim"])
        deg = str(obj["degree"])
        parts = [HomogeneousFunction.from_json({"dim": dim, "degree": deg, "terms": t})
                 for t in obj["parts"]]
        return cls(parts, dim, deg)

    def __repr__(self):
        return f"LogHomogeneousFunction(depth={self.log_depth}, parts={list(self.parts)!r})"


def log_residue(f: LogHomogeneousFunction) -> ResidueValue:
    """Residue of the top log coefficient."""
    return residue(f.top())


def log_divergence(sigma):
    out = sigma[0].partial(0)
    for j in range(1, len(sigma)):
        out = out + sigma[j].partial(j)
    return out


def _log_kernel(g: HomogeneousFunction, m, depth):
    n, a = g.dim, g.degree
    z = LogHomogeneousFunction.zero(n, a + 1, depth)
    if a != -n:
        return [LogHomogeneousFunction.single(g.times_coordinate(j) / (a + n), m, depth)
                for j in range(n)]
    out = [z] * n
    c = g.constant_harmonic_coefficient()
    if c:
        if m >= depth:
            raise ResidueObstruction(
                f"top log coefficient has degree -{n} and nonzero residue")
        radial = HomogeneousFunction.radial(n, -n, c)
        for j in range(n):
            h = radial.times_coordinate(j) / (m + 1)
            out[j] = out[j] + LogHomogeneousFunction.single(h, m + 1, depth)
    rest = g - g.term(0)
    if rest:
        for j, s in enumerate(decompose_derivatives(rest)):
            out[j] = out[j] + LogHomogeneousFunction.single(s, m, depth)
    return out


def log_decompose_derivatives(f: LogHomogeneousFunction) -> list[LogHomogeneousFunction]:
    """Write f = sum_j d_j sigma_j with sigma_j of degree a+1 and the same log depth.

    Proceeds downward in log degree; each kernel step leaves a defect one log
    degree lower, which is picked up at the next step.
    """
    n, a, k = f.dim, f.degree, f.log_depth
    if not log_residue(f).is_zero():
        raise ResidueObstruction(
            f"top log coefficient has residue {log_residue(f).render(12)} != 0")
    sigma = [LogHomogeneousFunction.zero(n, a + 1, k) for _ in range(n)]
    resid = f
    for m in range(k, -1, -1):
        g = resid.parts[m]
        if g.is_zero():
            continue
        step = _log_kernel(g, m, k)
        sigma = [s + t for s, t in zip(sigma, step)]
        resid = f - log_divergence(sigma).with_depth(k)
    if not resid.is_zero():
        raise AssertionError("log decomposition left a nonzero residual")
    return sigma
