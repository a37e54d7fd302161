"""Homogeneous differential forms on R^n minus the origin.

Forms are stored in Cartesian coordinates as maps from strictly increasing
index tuples to coefficient functions. The exterior algebra core below is
shared with the cotangent-cone forms of :mod:`conetrace.symp`.
"""
from __future__ import annotations

from .errors import DegreeMismatch, InvalidInput, NotClosed, ZeroHomogeneity
from .gaussian import GaussRational, to_fraction, frac_str
from .homog import (HomogeneousFunction, LogHomogeneousFunction, ResidueValue,
                    decompose_derivatives)


def merge_sign(I, J):
    """Sign and sorted union of dxi_I ^ dxi_J, or (0, None) if they overlap."""
    if set(I) & set(J):
        return 0, None
    inv = 0
    for a in I:
        for b in J:
            if a > b:
                inv += 1
    return (-1 if inv % 2 else 1), tuple(sorted(I + J))


class ExteriorForm:
    """Differential p-form with coefficients from a commutative function algebra.

    Subclasses supply the coefficient algebra through :meth:`_zero_coef` and
    :meth:`_partial`.
    """

    nvars: int
    p: int

    def __init__(self, nvars, p, coeffs):
        self.nvars = nvars
        self.p = p
        clean = {}
        for I, c in coeffs.items():
            I = tuple(I)
            if len(I) != p or list(I) != sorted(set(I)) or (I and (I[0] < 0 or I[-1] >= nvars)):
                raise InvalidInput(f"index set {I} is not a strictly increasing {p}-subset")
            if not c.is_zero():
                clean[I] = c
        self.coeffs = clean

    # hooks
    def _zero_coef(self, I):
        raise NotImplementedError

    def _partial(self, c, var):
        raise NotImplementedError

    def _new(self, p, coeffs):
        raise NotImplementedError

    def coef(self, I):
        I = tuple(I)
        return self.coeffs.get(I, self._zero_coef_for(len(I), I))

    def _zero_coef_for(self, p, I):
        return self._zero_coef(I)

    # algebra
    def is_zero(self):
        return not self.coeffs

    def __add__(self, other):
        if other.p != self.p or other.nvars != self.nvars:
            raise DegreeMismatch("forms of different degree cannot be added")
        out = dict(self.coeffs)
        for I, c in other.coeffs.items():
            out[I] = out[I] + c if I in out else c
        return self._new(self.p, out)

    def __neg__(self):
        return self._new(self.p, {I: -c for I, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return self._new(self.p, {I: v.scale(c) for I, v in self.coeffs.items()})

    def times_function(self, f):
        """Multiply every coefficient by the function f (0-form product)."""
        return self._new(self.p, {I: v * f for I, v in self.coeffs.items()})

    def wedge(self, other):
        out = {}
        for I, a in self.coeffs.items():
            for J, b in other.coeffs.items():
                s, K = merge_sign(I, J)
                if not s:
                    continue
                t = a * b
                if s < 0:
                    t = -t
                out[K] = out[K] + t if K in out else t
        return self._wedge_new(other, self.p + other.p, out)

    def _wedge_new(self, other, p, coeffs):
        return self._new(p, coeffs)

    def d(self):
        """Exterior derivative."""
        out = {}
        for I, c in self.coeffs.items():
            for v in range(self.nvars):
                if v in I:
                    continue
                dc = self._partial(c, v)
                if dc.is_zero():
                    continue
                s, K = merge_sign((v,), I)
                if s < 0:
                    dc = -dc
                out[K] = out[K] + dc if K in out else dc
        return self._d_new(self.p + 1, out)

    def _d_new(self, p, coeffs):
        return self._new(p, coeffs)

    def interior(self, field):
        """Interior product with a vector field given as {var: coefficient}."""
        if self.p == 0:
            raise InvalidInput("cannot contract a 0-form")
        out = {}
        for I, c in self.coeffs.items():
            for r, v in enumerate(I):
                if v not in field:
                    continue
                t = c * field[v]
                if t.is_zero():
                    continue
                if r % 2:
                    t = -t
                K = I[:r] + I[r + 1:]
                out[K] = out[K] + t if K in out else t
        return self._interior_new(field, self.p - 1, out)

    def _interior_new(self, field, p, coeffs):
        return self._new(p, coeffs)

    def __eq__(self, other):
        if not isinstance(other, ExteriorForm):
            return NotImplemented
        return (self.nvars == other.nvars and self.p == other.p
                and self.coeffs == other.coeffs and self._extra_eq(other))

    def _extra_eq(self, other):
        return True

    def __hash__(self):
        return hash((self.nvars, self.p, frozenset(self.coeffs.items())))


class HomogeneousForm(ExteriorForm):
    """p-form on R^n minus 0 of homogeneity a; coefficients have degree a - p.

    Parameters
    ----------
    dim : int
    p : int
        Form degree.
    homogeneity : rational
    coeffs : dict
        Sorted index tuple -> HomogeneousFunction of degree homogeneity - p.
    """

    def __init__(self, dim, p, homogeneity, coeffs=None):
        self.dim = dim
        self.homogeneity = to_fraction(homogeneity)
        coeffs = coeffs or {}
        for I, c in coeffs.items():
            if c.dim != dim or c.degree != self.homogeneity - p:
                raise DegreeMismatch(
                    f"coefficient of {I} has degree {frac_str(c.degree)}, "
                    f"expected {frac_str(self.homogeneity - p)}")
        super().__init__(dim, p, coeffs)

    def _zero_coef(self, I):
        return HomogeneousFunction.zero(self.dim, self.homogeneity - self.p)

    def _partial(self, c, var):
        return c.partial(var)

    def _new(self, p, coeffs):
        return HomogeneousForm(self.dim, p, self.homogeneity, coeffs)

    def _wedge_new(self, other, p, coeffs):
        return HomogeneousForm(self.dim, p, self.homogeneity + other.homogeneity, coeffs)

    def _extra_eq(self, other):
        return getattr(other, "homogeneity", None) == self.homogeneity

    # constructors
    @classmethod
    def function(cls, f: HomogeneousFunction):
        return cls(f.dim, 0, f.degree, {(): f})

    @classmethod
    def zero(cls, dim, p, homogeneity):
        return cls(dim, p, homogeneity, {})

    @classmethod
    def dxi(cls, dim, j):
        return cls(dim, 1, 1, {(j,): HomogeneousFunction.constant(dim)})

    @classmethod
    def volume(cls, dim):
        """dxi_1 ^ ... ^ dxi_n."""
        return cls(dim, dim, dim, {tuple(range(dim)): HomogeneousFunction.constant(dim)})

    @classmethod
    def r_inv_dr(cls, dim):
        """r^{-1} dr = sum_j xi_j dxi_j |xi|^{-2}."""
        return cls(dim, 1, 0, {(j,): HomogeneousFunction.coordinate(dim, j).times_radial(-2)
                               for j in range(dim)})

    def times_function(self, f):
        return HomogeneousForm(self.dim, self.p, self.homogeneity + f.degree,
                               {I: v * f for I, v in self.coeffs.items()})

    def __repr__(self):
        body = ", ".join(f"{I}: {c!r}" for I, c in sorted(self.coeffs.items()))
        return f"HomogeneousForm(n={self.dim}, p={self.p}, a={frac_str(self.homogeneity)}, {{{body}}})"


def liouville_field(dim):
    return {j: HomogeneousFunction.coordinate(dim, j) for j in range(dim)}


def exterior_derivative(omega):
    """d omega; raises the form degree by one and keeps the homogeneity."""
    return omega.d()


def contract_liouville(omega):
    """Interior product with X = sum_j xi_j d/dxi_j."""
    if omega.p < 1:
        raise InvalidInput("contraction needs a form of degree >= 1")
    if isinstance(omega, LogHomogeneousForm):
        field = {j: HomogeneousFunction.coordinate(omega.dim, j) for j in range(omega.dim)}
        return omega.interior(field)
    return omega.interior(liouville_field(omega.dim))


def euler_primitive(omega):
    """Primitive of a closed form of nonzero homogeneity a.

    For homogeneous forms this is (1/a) i_X omega. For log-polyhomogeneous
    forms the Lie derivative acts as a + N with N nilpotent on log degree, and
    beta = i_X (a+N)^{-1} omega.
    """
    if not omega.d().is_zero():
        raise NotClosed("euler_primitive needs a closed form (d omega != 0)")
    a = omega.homogeneity
    if a == 0:
        raise ZeroHomogeneity("homogeneity 0: the Euler primitive is undefined")
    if isinstance(omega, LogHomogeneousForm):
        term = omega.scale(GaussRational(1) / a)
        acc = term
        for _ in range(omega.log_depth):
            term = term.lower_log().scale(GaussRational(-1) / a)
            acc = acc + term
        return contract_liouville(acc)
    return contract_liouville(omega).scale(GaussRational(1) / a)


def split_degree_zero(omega: HomogeneousForm):
    """Split a homogeneity-0 form as r^{-1}dr ^ T + E with i_X T = i_X E = 0."""
    if omega.homogeneity != 0:
        raise InvalidInput("split_degree_zero needs homogeneity 0")
    n = omega.dim
    if omega.p == 0:
        return HomogeneousForm.zero(n, 0, 0), omega
    T = contract_liouville(omega)
    E = omega - HomogeneousForm.r_inv_dr(n).wedge(T)
    return T, E


def sphere_integral(beta: HomogeneousForm) -> ResidueValue:
    """Integral over the unit sphere of an (n-1)-form.

    With beta = sum_j (-1)^(j-1) b_j dxi_1..(omit j)..dxi_n the pullback
    integrates to the sphere integral of sum_j xi_j b_j; orientation is such
    that i_X(dxi_1 ^ ... ^ dxi_n) integrates to +Area_n.
    """
    n = beta.dim
    if beta.p != n - 1:
        raise InvalidInput(f"sphere_integral needs an {n - 1}-form, got a {beta.p}-form")
    g = None
    for j in range(n):
        I = tuple(i for i in range(n) if i != j)
        c = beta.coeffs.get(I)
        if c is None:
            continue
        t = c.times_coordinate(j)
        if j % 2:
            t = -t
        g = t if g is None else g + t
    if g is None:
        return ResidueValue(n)
    return ResidueValue.of(n, g.constant_harmonic_coefficient())


def primitive_of_top_form(f: HomogeneousFunction):
    """Homogeneous (n-1)-form beta with d beta = f dxi_1..dxi_n.

    Built from the derivative decomposition f = sum_j d_j sigma_j as
    beta = sum_j (-1)^(j-1) sigma_j dxi_1..(omit j)..dxi_n; raises
    ResidueObstruction when no homogeneous primitive exists.
    """
    n = f.dim
    sig = decompose_derivatives(f)
    coeffs = {}
    for j in range(n):
        I = tuple(i for i in range(n) if i != j)
        coeffs[I] = -sig[j] if j % 2 else sig[j]
    return HomogeneousForm(n, n - 1, f.degree + n, coeffs)


# log-polyhomogeneous forms
def _lower(f: LogHomogeneousFunction):
    """N(sum f_m log^m) = sum m f_m log^(m-1), keeping the depth."""
    k = f.log_depth
    z = HomogeneousFunction.zero(f.dim, f.degree)
    parts = [f.parts[m + 1].scale(m + 1) for m in range(k)] + [z]
    return LogHomogeneousFunction(parts, f.dim, f.degree)


class LogHomogeneousForm(ExteriorForm):
    """p-form whose coefficients are log-polyhomogeneous of degree (a - p, depth k)."""

    def __init__(self, dim, p, homogeneity, log_depth, coeffs=None):
        self.dim = dim
        self.homogeneity = to_fraction(homogeneity)
        self.log_depth = log_depth
        fixed = {}
        for I, c in (coeffs or {}).items():
            if isinstance(c, HomogeneousFunction):
                c = LogHomogeneousFunction.single(c, 0, log_depth)
            if c.degree != self.homogeneity - p or c.dim != dim:
                raise DegreeMismatch("log form coefficient has the wrong degree")
            if c.log_depth > log_depth:
                raise DegreeMismatch("log form coefficient exceeds the log depth")
            fixed[I] = c.with_depth(log_depth)
        super().__init__(dim, p, fixed)

    def _zero_coef(self, I):
        return LogHomogeneousFunction.zero(self.dim, self.homogeneity - self.p, self.log_depth)

    def _partial(self, c, var):
        return c.partial(var)

    def _new(self, p, coeffs):
        return LogHomogeneousForm(self.dim, p, self.homogeneity, self.log_depth, coeffs)

    def _wedge_new(self, other, p, coeffs):
        k = self.log_depth + getattr(other, "log_depth", 0)
        return LogHomogeneousForm(self.dim, p, self.homogeneity + other.homogeneity, k, coeffs)

    def _interior_new(self, field, p, coeffs):
        return LogHomogeneousForm(self.dim, p, self.homogeneity, self.log_depth, coeffs)

    def _extra_eq(self, other):
        return (getattr(other, "homogeneity", None) == self.homogeneity
                and getattr(other, "log_depth", None) == self.log_depth)

    def lower_log(self):
        return self._new(self.p, {I: _lower(c) for I, c in self.coeffs.items()})

    @classmethod
    def from_form(cls, omega: HomogeneousForm, depth=0):
        return cls(omega.dim, omega.p, omega.homogeneity, depth, dict(omega.coeffs))

    def __repr__(self):
        return (f"LogHomogeneousForm(n={self.dim}, p={self.p}, a={frac_str(self.homogeneity)}, "
                f"k={self.log_depth}, {len(self.coeffs)} terms)")
