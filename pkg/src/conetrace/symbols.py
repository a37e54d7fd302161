"""Classical symbols on R^n.

A classical symbol is represented as ``sum_j chi * c_j + smoothing + tail``
where ``chi`` is one fixed radial cut-off, the ``c_j`` are exact homogeneous
functions of degree ``a - j``, the smoothing part is polynomial times Gaussian
and the tail is an optional numerical evaluator (produced by the
decomposition routines). The module provides the residue, the cut-off
integral and the constructive "sum of partial derivatives" decompositions.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import expit

from .errors import (CutoffIntegralObstruction, InvalidInput, NonzeroIntegral,
                     ResidueObstruction, Unsupported)
from .gaussian import GaussRational, PiSum, frac_str, to_fraction
from .homog import (HomogeneousFunction, ResidueValue, decompose_derivatives,
                    sphere_area)
from .poly import Poly, harmonic_decompose, sphere_moment
from .precision import mpf_of, working

# ----------------------------------------------------------------------------
# the cut-off function


def _h_jet(t):
    """h(t), h'(t), h''(t) for the smooth step h = phi(t)/(phi(t)+phi(1-t))."""
    if t <= 0:
        return mpmath.mpf(0), mpmath.mpf(0), mpmath.mpf(0)
    if t >= 1:
        return mpmath.mpf(1), mpmath.mpf(0), mpmath.mpf(0)
    # h = 1/(1+e^u) with u = 1/t - 1/(1-t)
    u = 1 / t - 1 / (1 - t)
    u1 = -1 / t**2 - 1 / (1 - t)**2
    u2 = 2 / t**3 - 2 / (1 - t)**3
    s = 1 / (1 + mpmath.exp(u))
    w = s * (1 - s)
    return s, -w * u1, w * (1 - 2 * s) * u1**2 - w * u2


class CutoffChi:
    """The fixed cut-off chi(xi) = h(4|xi| - 1).

    chi vanishes for |xi| <= 1/4, equals 1 for |xi| >= 1/2 and is monotone
    in between.
    """

    inner = Fraction(1, 4)
    outer = Fraction(1, 2)

    def jet(self, r):
        """chi, chi', chi'' as functions of the radius (mpmath)."""
        h0, h1, h2 = _h_jet(4 * mpmath.mpf(r) - 1)
        return h0, 4 * h1, 16 * h2

    def radial(self, r):
        return self.jet(r)[0]

    def radial_np(self, r):
        t = 4 * np.asarray(r, dtype=float) - 1
        out = np.where(t >= 1, 1.0, 0.0)
        inside = (t > 0) & (t < 1)
        if np.any(inside):
            ti = t[inside]
            out[inside] = expit(-(1 / ti - 1 / (1 - ti)))
        return out

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.radial_np(np.sqrt(np.sum(xi * xi, axis=-1)))


CHI = CutoffChi()


def _quad(f, a, b):
    return mpmath.quad(f, [a, (a + b) / 2, b] if b != mpmath.inf else [a, b])


@lru_cache(maxsize=None)
def _c_chi(b: Fraction, n: int, dps: int):
    with mpmath.workdps(dps):
        e = mpf_of(b) + n - 1
        q = mpmath.mpf(1) / 4
        val = _quad(lambda r: CHI.radial(r) * r**e, q, mpmath.mpf(1) / 2)
        return +val


def c_chi(b, n):
    """C_chi(b) = int_0^{1/2} chi(r) r^{b+n-1} dr (chi vanishes below 1/4)."""
    with working() as dps:
        return _c_chi(to_fraction(b), int(n), dps)


@lru_cache(maxsize=None)
def _chi_moment(e: Fraction, dps: int):
    with mpmath.workdps(dps):
        ee = mpf_of(e)
        return +_quad(lambda s: CHI.jet(s)[1] * s**ee, mpmath.mpf(1) / 4, mpmath.mpf(1) / 2)


def chi_moment(e):
    """int chi'(s) s^e ds over the transition shell."""
    with working() as dps:
        return _chi_moment(to_fraction(e), dps)


def _partial_chi_moment(e, lo, hi):
    """int_lo^hi chi'(s) s^e ds with lo, hi clipped to the shell."""
    q, h = mpmath.mpf(1) / 4, mpmath.mpf(1) / 2
    lo, hi = max(lo, q), min(hi, h)
    if hi <= lo:
        return mpmath.mpf(0)
    ee = mpf_of(to_fraction(e))
    return mpmath.quad(lambda s: CHI.jet(s)[1] * s**ee, [lo, hi])


# ----------------------------------------------------------------------------
# homogeneous functions with pi-power coefficients


class ScaledHomogeneous:
    """Finite sum sum_h pi^(h/2) F_h with F_h exact homogeneous of one degree.

    Schwartz primitives produce Gamma values at half-integers, hence powers
    of sqrt(pi); those are tracked exactly here. Plain ``HomogeneousFunction``
    inputs become the single part h = 0.
    """

    __slots__ = ("dim", "degree", "parts")

    def __init__(self, dim, degree, parts=None):
        self.dim = dim
        self.degree = to_fraction(degree)
        clean = {}
        for h, F in (parts or {}).items():
            if F.is_zero():
                continue
            if F.dim != dim or F.degree != self.degree:
                raise InvalidInput("part has wrong dimension or degree")
            clean[int(h)] = clean[int(h)] + F if int(h) in clean else F
        self.parts = {h: F for h, F in clean.items() if not F.is_zero()}

    @classmethod
    def of(cls, f, h=0):
        if isinstance(f, ScaledHomogeneous):
            return f.shift(h)
        return cls(f.dim, f.degree, {h: f})

    @classmethod
    def zero(cls, dim, degree):
        return cls(dim, degree)

    def is_zero(self):
        return not self.parts

    def __bool__(self):
        return bool(self.parts)

    def pure(self):
        """The plain homogeneous function when only h = 0 occurs."""
        if not self.parts:
            return HomogeneousFunction.zero(self.dim, self.degree)
        if set(self.parts) == {0}:
            return self.parts[0]
        return None

    def __add__(self, other):
        if isinstance(other, HomogeneousFunction):
            other = ScaledHomogeneous.of(other)
        if other.dim != self.dim or (other.degree != self.degree and other and self):
            raise InvalidInput("cannot add scaled homogeneous functions of different degree")
        if not self.parts:
            return other
        out = dict(self.parts)
        for h, F in other.parts.items():
            out[h] = out[h] + F if h in out else F
        return ScaledHomogeneous(self.dim, self.degree, out)

    def __neg__(self):
        return ScaledHomogeneous(self.dim, self.degree, {h: -F for h, F in self.parts.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, ScaledHomogeneous)
                       else -ScaledHomogeneous.of(other))

    def shift(self, dh):
        return ScaledHomogeneous(self.dim, self.degree,
                                 {h + dh: F for h, F in self.parts.items()})

    def scale(self, c, h=0):
        if isinstance(c, PiSum):
            out = ScaledHomogeneous.zero(self.dim, self.degree)
            for hh, q in c.parts:
                out = out + self.scale(q, h + hh)
            return out
        return ScaledHomogeneous(self.dim, self.degree,
                                 {k + h: F.scale(c) for k, F in self.parts.items()})

    def _map(self, fn, degree):
        return ScaledHomogeneous(self.dim, degree, {h: fn(F) for h, F in self.parts.items()})

    def partial(self, j):
        return self._map(lambda F: F.partial(j), self.degree - 1)

    def times_coordinate(self, j):
        return self._map(lambda F: F.times_coordinate(j), self.degree + 1)

    def times_radial(self, s):
        return self._map(lambda F: F.times_radial(s), self.degree + to_fraction(s))

    def __mul__(self, other):
        if isinstance(other, HomogeneousFunction):
            return self._map(lambda F: F * other, self.degree + other.degree)
        if isinstance(other, ScaledHomogeneous):
            out = ScaledHomogeneous.zero(self.dim, self.degree + other.degree)
            for h1, F in self.parts.items():
                for h2, G in other.parts.items():
                    out = out + ScaledHomogeneous.of(F * G, h1 + h2)
            return out
        return self.scale(other)

    __rmul__ = __mul__

    def constant_part(self) -> PiSum:
        """sum_h q_h pi^(h/2) with q_h the constant-harmonic coefficients."""
        return PiSum(tuple((h, F.constant_harmonic_coefficient()) for h, F in self.parts.items()))

    def residue(self) -> ResidueValue:
        if self.degree != -self.dim:
            return ResidueValue(self.dim)
        return ResidueValue(self.dim, self.constant_part().parts)

    def eval_mp(self, xi):
        s = mpmath.mpc(0)
        for h, F in self.parts.items():
            s += F.eval_mp(xi) * mpmath.power(mpmath.pi, mpmath.mpf(h) / 2)
        return s

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for h, F in self.parts.items():
            out = out + F(xi) * np.pi ** (h / 2)
        return out

    def __eq__(self, other):
        if isinstance(other, HomogeneousFunction):
            other = ScaledHomogeneous.of(other)
        if not isinstance(other, ScaledHomogeneous):
            return NotImplemented
        if not self.parts and not other.parts:
            return self.dim == other.dim
        return (self.dim, self.degree, self.parts) == (other.dim, other.degree, other.parts)

    def __hash__(self):
        return hash((self.dim, self.degree, frozenset(self.parts.items())))

    def to_json(self):
        p = self.pure()
        if p is not None:
            return p.to_json()
        return {"dim": self.dim, "degree": frac_str(self.degree),
                "scaled": [[h, F.to_json()] for h, F in sorted(self.parts.items())]}

    @classmethod
    def from_json(cls, obj):
        if "scaled" in obj:
            parts = {}
            for h, F in obj["scaled"]:
                parts[int(h)] = HomogeneousFunction.from_json(F)
            return cls(int(obj["dim"]), to_fraction(str(obj["degree"])), parts)
        return cls.of(HomogeneousFunction.from_json(obj))

    def __repr__(self):
        if not self.parts:
            return f"ScaledHomogeneous(n={self.dim}, degree={frac_str(self.degree)}, 0)"
        return " + ".join(f"pi^({h}/2)*{F!r}" for h, F in sorted(self.parts.items()))


def as_scaled(f):
    return f if isinstance(f, ScaledHomogeneous) else ScaledHomogeneous.of(f)


# ----------------------------------------------------------------------------
# polynomial times Gaussian


def _gauss_moment_1d(m):
    """int_R t^m e^{-t^2} dt / sqrt(pi) (rational)."""
    if m % 2:
        return Fraction(0)
    out = Fraction(1)
    for i in range(1, m, 2):
        out *= Fraction(i, 2)
    return out


class PolyGaussian:
    """sum_h pi^(h/2) Q_h(xi) exp(-|xi|^2) with polynomial Q_h.

    The common case is a single part; ``PolyGaussian(n, Q)`` is
    ``Q(xi) e^{-|xi|^2}``. Total integrals are exact (see ``integral``).
    """

    __slots__ = ("dim", "parts")

    def __init__(self, dim, poly=None, pi_half_power=0, parts=None):
        self.dim = dim
        acc = {}
        if poly is not None:
            if poly.n != dim:
                raise InvalidInput("polynomial has the wrong number of variables")
            acc[int(pi_half_power)] = poly
        for h, Q in (parts or {}).items():
            acc[int(h)] = acc[int(h)] + Q if int(h) in acc else Q
        self.parts = {h: Q for h, Q in acc.items() if not Q.is_zero()}

    @classmethod
    def gaussian(cls, dim, c=1, pi_half_power=0):
        return cls(dim, Poly.const(dim, c), pi_half_power)

    @classmethod
    def zero(cls, dim):
        return cls(dim)

    @property
    def poly(self):
        if not self.parts:
            return Poly.zero(self.dim)
        if set(self.parts) != {0}:
            raise ValueError("PolyGaussian carries pi-power factors; use .parts")
        return self.parts[0]

    def is_zero(self):
        return not self.parts

    def __add__(self, other):
        if other is None:
            return self
        acc = dict(self.parts)
        for h, Q in other.parts.items():
            acc[h] = acc[h] + Q if h in acc else Q
        return PolyGaussian(self.dim, parts=acc)

    def __neg__(self):
        return PolyGaussian(self.dim, parts={h: -Q for h, Q in self.parts.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c, h=0):
        if isinstance(c, PiSum):
            out = PolyGaussian.zero(self.dim)
            for hh, q in c.parts:
                out = out + self.scale(q, h + hh)
            return out
        return PolyGaussian(self.dim, parts={k + h: Q.scale(c) for k, Q in self.parts.items()})

    def partial(self, j):
        """d_j (Q e^{-r^2}) = (d_j Q - 2 xi_j Q) e^{-r^2}."""
        return PolyGaussian(self.dim, parts={
            h: Q.diff(j) - Q.times_var(j).scale(2) for h, Q in self.parts.items()})

    def integral(self) -> PiSum:
        """Exact integral over R^n as a combination of half-integer Gamma values."""
        out = PiSum()
        for h, Q in self.parts.items():
            q = GaussRational(0)
            for e, c in Q.terms.items():
                w = Fraction(1)
                for k in e:
                    w *= _gauss_moment_1d(k)
                    if not w:
                        break
                if w:
                    q = q + c * w
            out = out + PiSum.of(q, h + self.dim)
        return out

    def eval_mp(self, xi):
        r2 = sum(x * x for x in xi)
        s = mpmath.mpc(0)
        for h, Q in self.parts.items():
            s += Q.eval_mp(xi) * mpmath.power(mpmath.pi, mpmath.mpf(h) / 2)
        return s * mpmath.exp(-r2)

    def grad_mp(self, xi):
        return [self.partial(j).eval_mp(xi) for j in range(self.dim)]

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        g = np.exp(-np.sum(xi * xi, axis=-1))
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for h, Q in self.parts.items():
            out = out + Q(xi) * np.pi ** (h / 2)
        return out * g

    def __eq__(self, other):
        if not isinstance(other, PolyGaussian):
            return NotImplemented
        return self.dim == other.dim and self.parts == other.parts

    def __hash__(self):
        return hash((self.dim, frozenset(self.parts.items())))

    def to_json(self):
        if not self.parts or set(self.parts) == {0}:
            return {"poly": self.poly.to_json()}
        return {"parts": [[h, Q.to_json()] for h, Q in sorted(self.parts.items())]}

    @classmethod
    def from_json(cls, dim, obj):
        if "parts" in obj:
            return cls(dim, parts={int(h): Poly.from_json(dim, Q) for h, Q in obj["parts"]})
        return cls(dim, Poly.from_json(dim, obj.get("poly", {})),
                   int(obj.get("pi_half_power", 0)))

    def __repr__(self):
        if not self.parts:
            return "PolyGaussian(0)"
        return " + ".join(f"pi^({h}/2)*({Q!r})" for h, Q in sorted(self.parts.items())) \
            + " * exp(-|xi|^2)"


# ----------------------------------------------------------------------------
# numerical tails: sums of coef * Q(xi) |xi|^p W(|xi|)


class RadialProfile:
    """Radial factor W(r) of a tail term. Subclasses supply W and W'."""

    #: W vanishes for r beyond this radius (None: no compact support)
    support = None
    #: asymptotic homogeneity of r^p Q W when W is not integrable at infinity
    power_tail = False

    def value(self, r):
        raise NotImplementedError

    def deriv(self, r):
        raise NotImplementedError


class ChiDefect(RadialProfile):
    """W = chi'(r) / r (commutator of d_j with multiplication by chi)."""

    support = Fraction(1, 2)

    def value(self, r):
        return CHI.jet(r)[1] / r

    def deriv(self, r):
        _, c1, c2 = CHI.jet(r)
        return c2 / r - c1 / r**2


class ChiMomentPrimitive(RadialProfile):
    """W(r) = int_r^{1/2} chi'(s) s^e ds."""

    support = Fraction(1, 2)

    def __init__(self, e):
        self.e = to_fraction(e)

    def value(self, r):
        return _partial_chi_moment(self.e, mpmath.mpf(r), mpmath.mpf(1) / 2) \
            if r < 0.5 else mpmath.mpf(0)

    def deriv(self, r):
        return -CHI.jet(r)[1] * mpmath.mpf(r) ** mpf_of(self.e)


class GammaRemainder(RadialProfile):
    """W(r) = (gamma(s, r^2) - chi(r) Gamma(s)) / 2 (lower incomplete Gamma)."""

    def __init__(self, s):
        self.s = to_fraction(s)

    def value(self, r):
        s = mpf_of(self.s)
        return (mpmath.gammainc(s, 0, r * r) - CHI.radial(r) * mpmath.gamma(s)) / 2

    def deriv(self, r):
        s = mpf_of(self.s)
        return r ** (2 * s - 1) * mpmath.exp(-r * r) - CHI.jet(r)[1] * mpmath.gamma(s) / 2


class RadialBalance(RadialProfile):
    """W = G(r) where xi_j G solves div(xi G) = rho for the radial defect.

    r^n G(r) = sum_c c * int_0^r chi'(s) s^{e_c} ds - nu pi^{-n/2} gamma(n/2, r^2)/2.
    When ``nu`` balances the total mass, G decays like a Gaussian; otherwise
    G ~ K r^{-n} at infinity.
    """

    def __init__(self, n, moments, nu):
        self.n = n
        self.moments = [(mpmath.mpmathify(c), to_fraction(e)) for c, e in moments]
        self.nu = mpmath.mpmathify(nu)
        k = sum((c * chi_moment(e) for c, e in self.moments), mpmath.mpf(0))
        self.K = k - self.nu / sphere_area(n)
        self.power_tail = abs(self.K) > mpmath.mpf(10) ** (-(mpmath.mp.dps - 8))

    def _rnG(self, r):
        s = mpmath.mpf(0)
        for c, e in self.moments:
            s += c * _partial_chi_moment(e, mpmath.mpf(0), r)
        if self.nu:
            n2 = mpmath.mpf(self.n) / 2
            s -= self.nu * mpmath.power(mpmath.pi, -n2) * mpmath.gammainc(n2, 0, r * r) / 2
        return s

    def _d_rnG(self, r):
        c1 = CHI.jet(r)[1]
        s = mpmath.mpf(0)
        for c, e in self.moments:
            s += c * c1 * r ** mpf_of(e)
        if self.nu:
            n2 = mpmath.mpf(self.n) / 2
            s -= self.nu * mpmath.power(mpmath.pi, -n2) * r ** (self.n - 1) * mpmath.exp(-r * r)
        return s

    def value(self, r):
        return self._rnG(r) / r**self.n

    def deriv(self, r):
        return (self._d_rnG(r) - self.n * r ** (self.n - 1) * self.value(r)) / r**self.n


class TailTerm:
    """coef * Q(xi) * |xi|^p * W(|xi|) with Q a homogeneous polynomial."""

    __slots__ = ("coef", "Q", "p", "profile", "_dQ", "_deg")

    def __init__(self, coef, Q: Poly, p, profile: RadialProfile):
        self.coef = coef if isinstance(coef, PiSum) else PiSum.of(coef)
        self.Q = Q
        self.p = to_fraction(p)
        self.profile = profile
        self._dQ = None
        ds = Q.degrees()
        self._deg = ds.pop() if len(ds) == 1 else None

    def _value_parts(self, xi):
        r = mpmath.sqrt(sum(x * x for x in xi))
        p = mpf_of(self.p)
        c = self.coef.value()
        return r, p, c

    def value(self, xi):
        r, p, c = self._value_parts(xi)
        return c * self.Q.eval_mp(xi) * r**p * self.profile.value(r)

    def grad(self, xi):
        r, p, c = self._value_parts(xi)
        if self._dQ is None:
            self._dQ = [self.Q.diff(i) for i in range(self.Q.n)]
        W = self.profile.value(r)
        W1 = self.profile.deriv(r)
        Qv = self.Q.eval_mp(xi)
        rad = p * r ** (p - 2) * W + r ** (p - 1) * W1
        return [c * (self._dQ[i].eval_mp(xi) * r**p * W + Qv * xi[i] * rad)
                for i in range(self.Q.n)]

    def integral(self):
        if self.profile.power_tail or self._deg is None:
            return None
        n = self.Q.n
        mean = GaussRational(0)
        for e, cc in self.Q.terms.items():
            mean = mean + cc * sphere_moment(e)
        if not mean:
            return mpmath.mpc(0)
        ex = self._deg + mpf_of(self.p) + n - 1
        W = self.profile.value
        pts = [mpmath.mpf(0), mpmath.mpf(1) / 4, mpmath.mpf(1) / 2]
        if self.profile.support is None:
            pts += [mpmath.mpf(4), mpmath.inf]
        rad = mpmath.quad(lambda r: r**ex * W(r), pts)
        return self.coef.value() * mean.to_mpc() * sphere_area(n) * rad

    def scaled(self, c):
        return TailTerm(self.coef * (c if isinstance(c, PiSum) else PiSum.of(c)),
                        self.Q, self.p, self.profile)


class NumericTail:
    """A finite sum of ``TailTerm``; evaluable with analytic gradients.

    ``accuracy`` records the absolute error bound promised for evaluations
    (driven by the working precision and 1-D quadrature tolerances).
    """

    def __init__(self, dim, terms=(), accuracy=None):
        self.dim = dim
        self.terms = list(terms)
        self.accuracy = accuracy if accuracy is not None else mpmath.mpf(10) ** (-25)

    def __add__(self, other):
        if other is None:
            return self
        return NumericTail(self.dim, self.terms + other.terms,
                           max(self.accuracy, other.accuracy))

    def __neg__(self):
        return NumericTail(self.dim, [t.scaled(-1) for t in self.terms], self.accuracy)

    def is_zero(self):
        return not self.terms

    @property
    def power_tail(self):
        return any(t.profile.power_tail for t in self.terms)

    def value(self, xi):
        with working():
            xi = [mpmath.mpf(x) for x in xi]
            return sum((t.value(xi) for t in self.terms), mpmath.mpc(0))

    def grad(self, xi):
        with working():
            xi = [mpmath.mpf(x) for x in xi]
            g = [mpmath.mpc(0)] * self.dim
            for t in self.terms:
                g = [a + b for a, b in zip(g, t.grad(xi))]
            return g

    def integral(self):
        """Integral over R^n; raises Unsupported when not integrable."""
        with working():
            s = mpmath.mpc(0)
            for t in self.terms:
                v = t.integral()
                if v is None:
                    raise Unsupported("numeric tail has no integrability certificate")
                s += v
            return s

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        flat = xi.reshape(-1, self.dim)
        out = np.array([complex(self.value(p)) for p in flat])
        return out.reshape(xi.shape[:-1])


# ----------------------------------------------------------------------------
# classical symbols


class ClassicalSymbol:
    """Truncated classical symbol sum_j chi c_j + smoothing + numeric tail.

    Parameters
    ----------
    dim : int
        Dimension n >= 2.
    order : rational
        Order a; component j must have degree a - j.
    components : list
        ``HomogeneousFunction`` or ``ScaledHomogeneous`` entries c_0..c_J.
    smoothing : PolyGaussian, optional
    numeric_tail : NumericTail, optional
    """

    def __init__(self, dim, order, components=(), smoothing=None, numeric_tail=None):
        self.dim = dim
        self.order = to_fraction(order)
        comps = []
        for j, c in enumerate(components):
            c = as_scaled(c)
            if c.dim != dim:
                raise InvalidInput("component dimension mismatch")
            if c and c.degree != self.order - j:
                raise InvalidInput(
                    f"component {j} has degree {frac_str(c.degree)}, expected "
                    f"{frac_str(self.order - j)}")
            comps.append(c if c else ScaledHomogeneous.zero(dim, self.order - j))
        self.components = comps
        if smoothing is not None and smoothing.is_zero():
            smoothing = None
        self.smoothing = smoothing
        if numeric_tail is not None and numeric_tail.is_zero():
            numeric_tail = None
        self.numeric_tail = numeric_tail
        self._grads = None

    @property
    def depth(self):
        return len(self.components) - 1

    @classmethod
    def from_homogeneous(cls, f):
        return cls(f.dim, f.degree, [f])

    @classmethod
    def from_smoothing(cls, g: PolyGaussian, order=None):
        return cls(g.dim, -g.dim - 1 if order is None else order, [], smoothing=g)

    def component_of_degree(self, b):
        b = to_fraction(b)
        j = self.order - b
        if j.denominator != 1 or j < 0 or j >= len(self.components):
            return ScaledHomogeneous.zero(self.dim, b)
        return self.components[int(j)]

    def achieved_order(self):
        """Largest degree actually present (None for a Schwartz-class symbol)."""
        degs = [c.degree for c in self.components if c]
        if self.numeric_tail is not None and self.numeric_tail.power_tail:
            degs.append(Fraction(1 - self.dim))
        return max(degs) if degs else None

    def is_zero(self):
        return (not any(self.components) and self.smoothing is None
                and self.numeric_tail is None)

    # arithmetic
    def __add__(self, other):
        if other.dim != self.dim:
            raise InvalidInput("dimension mismatch")
        hi = max(self.order, other.order)
        d = hi - min(self.order, other.order)
        if d.denominator != 1 and any(self.components) and any(other.components):
            raise InvalidInput("orders differ by a non-integer")
        degs = {}
        for s in (self, other):
            for c in s.components:
                if c:
                    degs[c.degree] = degs[c.degree] + c if c.degree in degs else c
        J = max([int(hi - b) for b in degs] + [0])
        comps = [degs.get(hi - j, ScaledHomogeneous.zero(self.dim, hi - j))
                 for j in range(J + 1)]
        sm = self.smoothing + other.smoothing if self.smoothing else other.smoothing
        nt = self.numeric_tail + other.numeric_tail if self.numeric_tail else other.numeric_tail
        return ClassicalSymbol(self.dim, hi, comps, sm, nt)

    def scale(self, c):
        return ClassicalSymbol(
            self.dim, self.order, [x.scale(c) for x in self.components],
            self.smoothing.scale(c) if self.smoothing else None,
            NumericTail(self.dim, [t.scaled(c) for t in self.numeric_tail.terms],
                        self.numeric_tail.accuracy) if self.numeric_tail else None)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def partial(self, j):
        """Exact symbol of d_j sigma, with the chi-commutator defect as a tail."""
        if self.numeric_tail is not None:
            raise Unsupported("derivatives of numeric tails are not represented")
        comps = [c.partial(j) for c in self.components]
        terms = []
        for c in self.components:
            if not c:
                continue
            cx = c.times_coordinate(j)
            for h, F in cx.parts.items():
                for k, H in F.terms.items():
                    terms.append(TailTerm(PiSum.of(1, h), H, F.degree - k, ChiDefect()))
        tail = NumericTail(self.dim, terms) if terms else None
        sm = self.smoothing.partial(j) if self.smoothing else None
        return ClassicalSymbol(self.dim, self.order - 1, comps, sm, tail)

    # evaluation
    def value_mp(self, xi):
        """Value at one point with extended precision."""
        with working():
            xi = [mpmath.mpf(x) for x in xi]
            r = mpmath.sqrt(sum(x * x for x in xi))
            c = CHI.radial(r)
            s = mpmath.mpc(0)
            if c:
                for comp in self.components:
                    if comp:
                        s += c * comp.eval_mp(xi)
            if self.smoothing is not None:
                s += self.smoothing.eval_mp(xi)
            if self.numeric_tail is not None:
                s += self.numeric_tail.value(xi)
            return s

    def grad_mp(self, xi):
        """Analytic gradient at one point with extended precision."""
        with working():
            xi = [mpmath.mpf(x) for x in xi]
            n = self.dim
            r = mpmath.sqrt(sum(x * x for x in xi))
            c0, c1, _ = CHI.jet(r)
            g = [mpmath.mpc(0)] * n
            if self._grads is None:
                self._grads = [[comp.partial(i) for i in range(n)] if comp else None
                               for comp in self.components]
            for comp, gr in zip(self.components, self._grads):
                if not comp:
                    continue
                v = comp.eval_mp(xi) if c1 else 0
                for i in range(n):
                    g[i] += c0 * gr[i].eval_mp(xi) if c0 else 0
                    if c1:
                        g[i] += c1 * xi[i] / r * v
            if self.smoothing is not None:
                g = [a + b for a, b in zip(g, self.smoothing.grad_mp(xi))]
            if self.numeric_tail is not None:
                g = [a + b for a, b in zip(g, self.numeric_tail.grad(xi))]
            return g

    def __call__(self, xi):
        """Vectorized complex-double evaluation at points of shape (..., n)."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape[:-1], dtype=complex)
        if any(self.components):
            with np.errstate(divide="ignore", invalid="ignore"):
                ch = CHI(xi)
                acc = np.zeros_like(out)
                for comp in self.components:
                    if comp:
                        acc = acc + comp(xi)
                out = out + np.where(ch > 0, ch * acc, 0)
        if self.smoothing is not None:
            out = out + self.smoothing(xi)
        if self.numeric_tail is not None:
            out = out + self.numeric_tail(xi)
        return out

    # serialization
    def to_json(self):
        obj = {"dim": self.dim, "order": frac_str(self.order), "depth": self.depth,
               "components": [c.to_json() if c else None for c in self.components]}
        if self.smoothing is not None:
            obj["smoothing"] = self.smoothing.to_json()
        if self.numeric_tail is not None:
            obj["numeric_tail"] = {"terms": len(self.numeric_tail.terms),
                                   "accuracy": mpmath.nstr(self.numeric_tail.accuracy, 3)}
        return obj

    @classmethod
    def from_json(cls, obj):
        try:
            n = int(obj["dim"])
            a = to_fraction(str(obj["order"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"bad symbol record: {exc}") from exc
        comps = []
        for j, c in enumerate(obj.get("components", [])):
            if c is None or c == {}:
                comps.append(ScaledHomogeneous.zero(n, a - j))
                continue
            c = dict(c)
            c.setdefault("dim", n)
            c.setdefault("degree", frac_str(a - j))
            comps.append(ScaledHomogeneous.from_json(c))
        depth = obj.get("depth")
        if depth is not None:
            depth = int(depth)
            while len(comps) < depth + 1:
                comps.append(ScaledHomogeneous.zero(n, a - len(comps)))
        sm = obj.get("smoothing")
        sm = PolyGaussian.from_json(n, sm) if sm else None
        if obj.get("numeric_tail"):
            raise InvalidInput("numeric tails cannot be deserialized")
        return cls(n, a, comps, sm)

    def __repr__(self):
        return (f"ClassicalSymbol(n={self.dim}, order={frac_str(self.order)}, "
                f"depth={self.depth}, smoothing={self.smoothing is not None}, "
                f"tail={self.numeric_tail is not None})")


def residue(sigma: ClassicalSymbol) -> ResidueValue:
    """Residue of the degree -n component (zero when there is none)."""
    return sigma.component_of_degree(-sigma.dim).residue()


def _component_cutoff_factor(b: Fraction, n: int):
    if b + n == 0:
        return c_chi(b, n) + mpmath.log(2)
    e = mpf_of(b) + n
    return c_chi(b, n) - mpmath.power(2, -e) / e


def cutoff_integral(sigma: ClassicalSymbol):
    """Cut-off integral: the constant term of int_{|xi|<=R} sigma as R -> oo.

    Returns
    -------
    value : mpc
        The finite part.
    log_coefficient : ResidueValue
        Coefficient of log R, equal to the residue.
    """
    n = sigma.dim
    with working():
        total = mpmath.mpc(0)
        area = sphere_area(n)
        for c in sigma.components:
            if not c:
                continue
            q = c.constant_part()
            if q:
                total += q.value() * area * _component_cutoff_factor(c.degree, n)
        if sigma.smoothing is not None:
            total += sigma.smoothing.integral().value()
        if sigma.numeric_tail is not None:
            total += sigma.numeric_tail.integral()
        return +total, residue(sigma)


def divergence_mp(sigmas, xi):
    """sum_j d_j sigma_j at one point from analytic gradients."""
    with working():
        s = mpmath.mpc(0)
        for j, sj in enumerate(sigmas):
            s += sj.grad_mp(xi)[j]
        return s


# ----------------------------------------------------------------------------
# sum-of-derivatives decompositions


def _gamma_half(s: Fraction) -> PiSum:
    """Gamma(s) for s a positive integer or half-integer, exactly."""
    if s.denominator == 1:
        out = Fraction(1)
        for i in range(1, int(s)):
            out *= i
        return PiSum.of(out)
    if s.denominator != 2 or s <= 0:
        raise InvalidInput("Gamma is only exact at positive half-integers here")
    out = Fraction(1)
    t = Fraction(1, 2)
    while t < s:
        out *= t
        t += 1
    return PiSum.of(out, 1)


def schwartz_decompose(f: PolyGaussian) -> list[ClassicalSymbol]:
    """sigma_j(xi) = int_0^1 f(t xi) xi_j t^{n-1} dt for a polynomial Gaussian f.

    Each sigma_j has one exact homogeneous component of degree 1-n plus a
    closed-form remainder in lower incomplete Gamma functions.
    """
    n = f.dim
    deg = Fraction(1 - n)
    comps = [ScaledHomogeneous.zero(n, deg) for _ in range(n)]
    terms = [[] for _ in range(n)]
    for h, P in f.parts.items():
        for d, Pd in P.homogeneous_parts().items():
            s = Fraction(d + n, 2)
            gam = _gamma_half(s)
            for m, H in enumerate(harmonic_decompose(Pd, d)):
                if H.is_zero():
                    continue
                k = d - 2 * m
                for j in range(n):
                    Q = H.times_var(j)
                    lead = HomogeneousFunction.from_raw(n, deg, [Q])
                    comps[j] = comps[j] + ScaledHomogeneous.of(lead, h).scale(
                        gam * PiSum.of(Fraction(1, 2)))
                    terms[j].append(TailTerm(PiSum.of(1, h), Q, -k - n, GammaRemainder(s)))
    return [ClassicalSymbol(n, deg, [comps[j]], None,
                            NumericTail(n, terms[j]) if terms[j] else None)
            for j in range(n)]


def _last_variable_primitive(n, P: Poly):
    """Split P e^{-r^2} = d_n(S e^{-r^2}) + G(xi') e^{-|xi'|^2} e^{-t^2}/sqrt(pi).

    ``t`` is the last variable. Returns (S, G) with S a polynomial in n
    variables and G a polynomial in the first n-1 variables (times sqrt(pi)
    relative to the input scale). Uses
    int_{-oo}^t s^m e^{-s^2} ds = A_m(t) e^{-t^2} + c_m int_{-oo}^t e^{-s^2} ds,
    and the erf parts cancel after subtracting the fiber mean.
    """
    # A_m as coefficient lists in t, c_m = moment / sqrt(pi)
    by_power = {}
    for e, c in P.terms.items():
        by_power.setdefault(e[-1], {})[e[:-1] + (0,)] = c
    mmax = max(by_power) if by_power else 0
    A = [[], [Fraction(-1, 2)]]
    for m in range(2, mmax + 1):
        prev = A[m - 2]
        cur = [Fraction(0)] * m
        cur[m - 1] += Fraction(-1, 2)
        for i, v in enumerate(prev):
            cur[i] += Fraction(m - 1, 2) * v
        A.append(cur)
    S = Poly.zero(n)
    G = {}
    for m, coeffs in by_power.items():
        pm = Poly(n, coeffs)
        cm = _gauss_moment_1d(m)
        if cm:
            for e, c in coeffs.items():
                key = e[:-1]
                G[key] = G.get(key, GaussRational(0)) + c * cm
        if m == 0:
            continue
        At = Poly(n, {(0,) * (n - 1) + (i,): v for i, v in enumerate(A[m]) if v})
        S = S + pm * At
    return S, Poly(n - 1, G) if n > 1 else Poly(0, G)


def _zero_integral_poly(n, P: Poly):
    """Polynomials S_1..S_n with sum_j d_j (S_j e^{-r^2}) = P e^{-r^2}."""
    S_last, G = _last_variable_primitive(n, P)
    if n == 1:
        if G.terms and any(G.terms.values()):
            raise NonzeroIntegral("integral of f does not vanish")
        return [S_last]
    if G.is_zero():
        return [Poly.zero(n)] * (n - 1) + [S_last]
    lower = _zero_integral_poly(n - 1, G)
    # lift: tau(xi') e^{-|xi'|^2} * e^{-t^2}/sqrt(pi); the 1/sqrt(pi) is tracked by caller
    lifted = [Poly(n, {e + (0,): c for e, c in S.terms.items()}) for S in lower]
    return lifted + [S_last]


def schwartz_decompose_zero_integral(f: PolyGaussian) -> list[PolyGaussian]:
    """Schwartz primitives sigma_j with sum_j d_j sigma_j = f, requiring int f = 0.

    Fiber-integration recursion over the last variable; every output is again
    polynomial times Gaussian (the error-function parts cancel exactly).

    Raises
    ------
    NonzeroIntegral
        When the exact integral of f is not zero.
    """
    n = f.dim
    if not f.integral().is_zero():
        raise NonzeroIntegral(
            f"int f = {mpmath.nstr(f.integral().value(), 15)} != 0; "
            "Schwartz primitives exist only for zero-integral f")
    out = [PolyGaussian.zero(n) for _ in range(n)]
    for h, P in f.parts.items():
        S = _zero_integral_poly_scaled(n, P)
        for j in range(n):
            for dh, Sj in S[j].items():
                out[j] = out[j] + PolyGaussian(n, Sj, h + dh)
    return out


def _zero_integral_poly_scaled(n, P):
    """Like ``_zero_integral_poly`` but returns {pi_half_shift: poly} per j.

    Each recursion level multiplies the fiber mean by sqrt(pi) and divides
    the lifted primitive by sqrt(pi), so the net shift is zero; it is kept
    explicit here to mirror the construction.
    """
    S = _zero_integral_poly(n, P)
    return [{0: Sj} for Sj in S]


def _radial_tolerance(scale):
    return mpmath.mpf(10) ** (-(mpmath.mp.dps - 10)) * (1 + scale)


def classical_decompose(sigma: ClassicalSymbol) -> list[ClassicalSymbol]:
    """Write sigma = sum_j d_j sigma_j with classical sigma_j.

    Integer order a requires residue(sigma) = 0 and yields order
    max(a, -n) + 1; non-integer order requires the cut-off integral to vanish
    and yields order a + 1. Components are handled exactly; the defect from
    differentiating the cut-off lives in the numeric tail.

    Raises
    ------
    ResidueObstruction, CutoffIntegralObstruction
    """
    if sigma.numeric_tail is not None:
        raise Unsupported("symbols with numeric tails cannot be decomposed")
    n, a = sigma.dim, sigma.order
    integer = a.denominator == 1
    with working():
        if integer:
            res = residue(sigma)
            if not res.is_zero():
                raise ResidueObstruction(
                    f"residue {res.render(15)} != 0 at integer order {frac_str(a)}")
            out_order = max(a, Fraction(-n)) + 1
        else:
            val, _ = cutoff_integral(sigma)
            scale = sum((abs(c.constant_part().value()) for c in sigma.components if c),
                        mpmath.mpf(0))
            if sigma.smoothing is not None:
                scale += abs(sigma.smoothing.integral().value())
            if abs(val) > _radial_tolerance(scale):
                raise CutoffIntegralObstruction(
                    f"cut-off integral {mpmath.nstr(val, 15)} != 0 at non-integer "
                    f"order {frac_str(a)}")
            out_order = a + 1

        comp_out = [dict() for _ in range(n)]
        tails = [[] for _ in range(n)]
        moments = []  # (numeric coefficient, exponent e) of the radial defect
        for c in sigma.components:
            if not c:
                continue
            for h, F in c.parts.items():
                sig = decompose_derivatives(F)
                for j in range(n):
                    if sig[j]:
                        b = sig[j].degree
                        prev = comp_out[j].get(b)
                        add = ScaledHomogeneous.of(sig[j], h)
                        comp_out[j][b] = prev + add if prev is not None else add
                P = HomogeneousFunction.zero(n, F.degree + 2)
                for j in range(n):
                    if sig[j]:
                        P = P + sig[j].times_coordinate(j)
                d = P.degree
                for k, H in P.terms.items():
                    if k == 0:
                        q = H.coefficient((0,) * n) * PiSum.of(1, h)
                        moments.append((PiSum(q.parts).value(), d + n - 2))
                        continue
                    prof = ChiMomentPrimitive(d - k)
                    for i in range(n):
                        dH = H.diff(i)
                        if not dH.is_zero():
                            tails[i].append(TailTerm(PiSum.of(Fraction(1, k), h), dH, 0, prof))

        smooth_out = [None] * n
        nu = mpmath.mpf(0)
        schwartz = None
        g = sigma.smoothing
        if integer:
            if g is not None:
                schwartz = schwartz_decompose(g)
        else:
            area = sphere_area(n)
            nu = area * sum((c * chi_moment(e) for c, e in moments), mpmath.mpf(0))
            if g is not None:
                Is = g.integral()
                psi = PolyGaussian(n, parts={h - n: Poly.const(n, q) for h, q in Is.parts})
                smooth_out = schwartz_decompose_zero_integral(g - psi)
        if moments:
            prof = RadialBalance(n, moments, nu)
            for i in range(n):
                tails[i].append(TailTerm(PiSum.of(-1), Poly.var(n, i), 0, prof))

        result = []
        for j in range(n):
            comps = {}
            for b, v in comp_out[j].items():
                comps[b] = v
            tail = NumericTail(n, tails[j]) if tails[j] else None
            sm = smooth_out[j]
            if schwartz is not None:
                sj = schwartz[j]
                for cc in sj.components:
                    if cc:
                        comps[cc.degree] = comps[cc.degree] + cc if cc.degree in comps else cc
                tail = sj.numeric_tail + tail if sj.numeric_tail is not None else tail
            J = max([int(out_order - b) for b in comps] + [0])
            clist = [comps.get(out_order - i, ScaledHomogeneous.zero(n, out_order - i))
                     for i in range(J + 1)]
            result.append(ClassicalSymbol(n, out_order, clist, sm, tail))
        return result
