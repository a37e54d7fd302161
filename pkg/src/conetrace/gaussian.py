"""Exact Gaussian rationals q = re + i*im with re, im in Q."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import mpmath


def to_fraction(x) -> Fraction:
    """Coerce ints, Fractions and "p/q" strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational number")


class GaussRational:
    """Complex number with rational real and imaginary parts.

    Instances are immutable and hashable. Arithmetic with ints and Fractions
    promotes automatically.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", to_fraction(re))
        object.__setattr__(self, "im", to_fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussRational is immutable")

    @classmethod
    def coerce(cls, x) -> "GaussRational":
        if isinstance(x, GaussRational):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, (list, tuple)) and len(x) == 2:
            return cls(to_fraction(x[0]), to_fraction(x[1]))
        return cls(to_fraction(x), 0)

    # arithmetic
    def __add__(self, other):
        try:
            o = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            o = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussRational.coerce(other) - self

    def __mul__(self, other):
        try:
            o = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        if o.im == 0:
            return GaussRational(self.re * o.re, self.im * o.re)
        return GaussRational(self.re * o.re - self.im * o.im,
                             self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussRational.coerce(other)
        if o.im == 0:
            if o.re == 0:
                raise ZeroDivisionError("division by zero")
            return GaussRational(self.re / o.re, self.im / o.re)
        d = o.re * o.re + o.im * o.im
        return GaussRational((self.re * o.re + self.im * o.im) / d,
                             (self.im * o.re - self.re * o.im) / d)

    def __rtruediv__(self, other):
        return GaussRational.coerce(other) / self

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers are exact")
        if k < 0:
            return (GaussRational(1) / self) ** (-k)
        out = GaussRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self):
        return GaussRational(self.re, -self.im)

    def __abs__(self):
        return abs(complex(self))

    def abs_bound(self) -> Fraction:
        """Rational upper bound for the modulus (|re| + |im|)."""
        return abs(self.re) + abs(self.im)

    # comparison / hashing
    def __eq__(self, other):
        try:
            o = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    # conversions
    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def to_mpc(self):
        return mpmath.mpc(mpmath.mpf(self.re.numerator) / self.re.denominator,
                          mpmath.mpf(self.im.numerator) / self.im.denominator)

    def to_json(self):
        return [_frac_str(self.re), _frac_str(self.im)]

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (list, tuple)):
            return cls(to_fraction(obj[0]), to_fraction(obj[1]))
        return cls(to_fraction(obj), 0)

    def __repr__(self):
        if self.im == 0:
            return f"GaussRational({_frac_str(self.re)})"
        return f"GaussRational({_frac_str(self.re)}, {_frac_str(self.im)})"

    def __str__(self):
        if self.im == 0:
            return _frac_str(self.re)
        if self.re == 0:
            return f"{_frac_str(self.im)}i"
        sign = "+" if self.im > 0 else "-"
        return f"({_frac_str(self.re)}{sign}{_frac_str(abs(self.im))}i)"


def _frac_str(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


frac_str = _frac_str

ZERO = GaussRational(0)
ONE = GaussRational(1)
I = GaussRational(0, 1)


def gq(x) -> GaussRational:
    return GaussRational.coerce(x)


class PiSum:
    """Exact scalar sum_h q_h pi^(h/2) with Gaussian-rational q_h.

    Integrals of polynomial-Gaussian functions and Gamma values at
    half-integers land in this class.
    """

    __slots__ = ("parts",)

    def __init__(self, parts=()):
        acc = {}
        for h, q in (parts.items() if isinstance(parts, dict) else parts):
            q = gq(q)
            acc[int(h)] = acc.get(int(h), ZERO) + q
        self.parts = tuple(sorted((h, q) for h, q in acc.items() if q))

    @classmethod
    def of(cls, q, h=0):
        return cls(((h, q),))

    def is_zero(self):
        return not self.parts

    def __bool__(self):
        return bool(self.parts)

    def __add__(self, other):
        if not isinstance(other, PiSum):
            other = PiSum.of(other)
        return PiSum(self.parts + other.parts)

    __radd__ = __add__

    def __neg__(self):
        return PiSum(tuple((h, -q) for h, q in self.parts))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, PiSum):
            other = PiSum.of(other)
        return PiSum(tuple((h1 + h2, q1 * q2) for h1, q1 in self.parts
                           for h2, q2 in other.parts))

    __rmul__ = __mul__

    def shift(self, dh):
        """Multiply by pi^(dh/2)."""
        return PiSum(tuple((h + dh, q) for h, q in self.parts))

    def value(self):
        s = mpmath.mpc(0)
        for h, q in self.parts:
            s += q.to_mpc() * mpmath.power(mpmath.pi, mpmath.mpf(h) / 2)
        return s

    def __complex__(self):
        return complex(self.value())

    def __eq__(self, other):
        if isinstance(other, PiSum):
            return self.parts == other.parts
        try:
            return self == PiSum.of(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(self.parts)

    def to_json(self):
        return [[h, q.to_json()] for h, q in self.parts]

    @classmethod
    def from_json(cls, obj):
        return cls(tuple((int(h), GaussRational.from_json(q)) for h, q in obj))

    def __repr__(self):
        if not self.parts:
            return "PiSum(0)"
        return "PiSum(" + " + ".join(f"{q}*pi^({h}/2)" for h, q in self.parts) + ")"
