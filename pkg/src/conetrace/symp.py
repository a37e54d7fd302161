"""The symplectic cone T*T^n minus the zero section.

Coordinates are (x_1..x_n, xi_1..xi_n); in form index tuples the variable
x_i has index i and xi_i has index n + i. The symplectic form is
omega = sum_i dxi_i ^ dx_i, Hamiltonian fields satisfy iota_{X_f} omega = -df,
and then

    {f, g} = sum_i (d_{xi_i} f d_{x_i} g - d_{x_i} f d_{xi_i} g).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import (DegreeMismatch, InvalidInput, RankDeficient, ResidueLeak,
                     ResidueObstruction, ToleranceNotMet, Unsupported)
from .forms import ExteriorForm
from .gaussian import GaussRational, PiSum, frac_str, to_fraction
from .homog import HomogeneousFunction, ResidueValue, decompose_derivatives
from .symbols import ScaledHomogeneous, as_scaled


def _key(k):
    return tuple(int(v) for v in k)


class ConeFunction:
    """f(x, xi) = sum_k e^{i k.x} f_k(xi) with every f_k homogeneous of one degree.

    Parameters
    ----------
    dim : int
        Base dimension n >= 2.
    degree : rational
        Common fiber degree a.
    modes : dict
        Integer vector k -> HomogeneousFunction or ScaledHomogeneous.
    """

    __slots__ = ("dim", "degree", "modes", "_hash")

    def __init__(self, dim, degree, modes=None):
        if not isinstance(dim, int) or dim < 2:
            raise InvalidInput("base dimension must be an integer >= 2")
        self.dim = dim
        self.degree = to_fraction(degree)
        clean = {}
        for k, f in (modes or {}).items():
            k = _key(k)
            if len(k) != dim:
                raise InvalidInput(f"mode {k} has wrong length")
            f = as_scaled(f)
            if not f:
                continue
            if f.dim != dim or f.degree != self.degree:
                raise DegreeMismatch(
                    f"mode {k} has degree {frac_str(f.degree)}, expected {frac_str(self.degree)}")
            clean[k] = clean[k] + f if k in clean else f
        self.modes = {k: f for k, f in clean.items() if f}
        self._hash = None

    @classmethod
    def _raw(cls, dim, degree, modes):
        c = cls.__new__(cls)
        c.dim = dim
        c.degree = degree
        c.modes = {k: f for k, f in modes.items() if f}
        c._hash = None
        return c

    # constructors
    @classmethod
    def zero(cls, dim, degree=0):
        return cls._raw(dim, to_fraction(degree), {})

    @classmethod
    def fiber(cls, f, k=None):
        """e^{i k.x} f(xi) (k defaults to the zero mode)."""
        k = (0,) * f.dim if k is None else _key(k)
        return cls(f.dim, f.degree, {k: f})

    @classmethod
    def exp(cls, dim, k, c=1):
        return cls(dim, 0, {_key(k): HomogeneousFunction.constant(dim, c)})

    @classmethod
    def cos(cls, dim, i, f=None):
        """cos(x_i) f(xi) (f defaults to 1)."""
        f = HomogeneousFunction.constant(dim) if f is None else f
        e = [0] * dim
        e[i] = 1
        m = tuple(-v for v in e)
        half = Fraction(1, 2)
        return cls(dim, f.degree, {tuple(e): f.scale(half), m: f.scale(half)})

    @classmethod
    def sin(cls, dim, i, f=None):
        f = HomogeneousFunction.constant(dim) if f is None else f
        e = [0] * dim
        e[i] = 1
        m = tuple(-v for v in e)
        return cls(dim, f.degree, {tuple(e): f.scale(GaussRational(0, Fraction(-1, 2))),
                                   m: f.scale(GaussRational(0, Fraction(1, 2)))})

    # structure
    def is_zero(self):
        return not self.modes

    def __bool__(self):
        return bool(self.modes)

    def mode(self, k):
        return self.modes.get(_key(k), ScaledHomogeneous.zero(self.dim, self.degree))

    def max_mode(self):
        return max((max(abs(v) for v in k) for k in self.modes), default=0)

    # arithmetic
    def __add__(self, other):
        if isinstance(other, (HomogeneousFunction, ScaledHomogeneous)):
            other = ConeFunction.fiber(as_scaled(other))
        if other.dim != self.dim:
            raise InvalidInput("dimension mismatch")
        if not other.modes:
            return self
        if not self.modes:
            return other
        if other.degree != self.degree:
            raise DegreeMismatch(
                f"cannot add degrees {frac_str(self.degree)} and {frac_str(other.degree)}")
        out = dict(self.modes)
        for k, f in other.modes.items():
            out[k] = out[k] + f if k in out else f
        return ConeFunction._raw(self.dim, self.degree, out)

    def __neg__(self):
        return ConeFunction._raw(self.dim, self.degree, {k: -f for k, f in self.modes.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c, h=0):
        return ConeFunction._raw(self.dim, self.degree,
                                 {k: f.scale(c, h) for k, f in self.modes.items()})

    def __mul__(self, other):
        if isinstance(other, (HomogeneousFunction, ScaledHomogeneous)):
            other = ConeFunction.fiber(as_scaled(other))
        if not isinstance(other, ConeFunction):
            return self.scale(other)
        deg = self.degree + other.degree
        # collect raw polynomial products per (mode, pi power) and normalize once
        raw = {}
        for k1, f1 in self.modes.items():
            f1 = as_scaled(f1)
            for k2, f2 in other.modes.items():
                f2 = as_scaled(f2)
                k = tuple(a + b for a, b in zip(k1, k2))
                for h1, F in f1.parts.items():
                    for h2, G in f2.parts.items():
                        bucket = raw.setdefault(k, {}).setdefault(h1 + h2, [])
                        bucket.extend(H * K for H in F.terms.values() for K in G.terms.values())
        out = {}
        for k, parts in raw.items():
            sh = ScaledHomogeneous(self.dim, deg, {
                h: HomogeneousFunction.from_raw(self.dim, deg, polys) for h, polys in parts.items()})
            if sh:
                out[k] = sh
        return ConeFunction._raw(self.dim, deg, out)

    def __rmul__(self, other):
        return self.scale(other)

    def conjugate(self):
        out = {}
        for k, f in self.modes.items():
            parts = {h: F.conjugate() for h, F in f.parts.items()}
            out[tuple(-v for v in k)] = ScaledHomogeneous(self.dim, self.degree, parts)
        return ConeFunction._raw(self.dim, self.degree, out)

    def d_x(self, i):
        """d/dx_i: multiplies mode k by i k_i."""
        out = {}
        for k, f in self.modes.items():
            if k[i]:
                out[k] = f.scale(GaussRational(0, k[i]))
        return ConeFunction._raw(self.dim, self.degree, out)

    def d_xi(self, i):
        return ConeFunction._raw(self.dim, self.degree - 1,
                                 {k: f.partial(i) for k, f in self.modes.items()})

    def partial(self, var):
        """Derivative in variable ``var`` (x_i is i, xi_i is n + i)."""
        n = self.dim
        return self.d_x(var) if var < n else self.d_xi(var - n)

    def times_coordinate(self, i):
        return ConeFunction._raw(self.dim, self.degree + 1,
                                 {k: f.times_coordinate(i) for k, f in self.modes.items()})

    def times_radial(self, s):
        return ConeFunction._raw(self.dim, self.degree + to_fraction(s),
                                 {k: f.times_radial(s) for k, f in self.modes.items()})

    def zero_mode(self):
        return self.mode((0,) * self.dim)

    # comparison
    def __eq__(self, other):
        if not isinstance(other, ConeFunction):
            return NotImplemented
        if not self.modes and not other.modes:
            return self.dim == other.dim
        return (self.dim, self.degree, self.modes) == (other.dim, other.degree, other.modes)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, self.degree if self.modes else None,
                               frozenset(self.modes.items())))
        return self._hash

    # evaluation
    def __call__(self, x, xi):
        """Evaluate on the product grid: x shape (A, n), xi shape (B, n) -> (A, B)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        out = np.zeros((x.shape[0], xi.shape[0]), dtype=complex)
        for k, f in self.modes.items():
            out += np.exp(1j * (x @ np.array(k, dtype=float)))[:, None] * f(xi)[None, :]
        return out

    def eval_point(self, x, xi):
        """Value at one point with complex doubles."""
        return self(np.asarray(x)[None, :], np.asarray(xi)[None, :])[0, 0]

    def eval_mp(self, x, xi):
        s = mpmath.mpc(0)
        for k, f in self.modes.items():
            s += mpmath.expj(sum(a * b for a, b in zip(k, x))) * f.eval_mp(xi)
        return s

    # serialization
    def to_json(self):
        return {"dim": self.dim, "degree": frac_str(self.degree),
                "modes": {",".join(map(str, k)): f.to_json()
                          for k, f in sorted(self.modes.items())}}

    @classmethod
    def from_json(cls, obj):
        try:
            n = int(obj["dim"])
            a = to_fraction(str(obj["degree"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"bad cone function record: {exc}") from exc
        modes = {}
        for key, f in obj.get("modes", {}).items():
            k = tuple(int(v) for v in key.split(","))
            f = dict(f)
            f.setdefault("dim", n)
            f.setdefault("degree", frac_str(a))
            modes[k] = ScaledHomogeneous.from_json(f)
        return cls(n, a, modes)

    def __repr__(self):
        if not self.modes:
            return f"ConeFunction(n={self.dim}, 0)"
        body = ", ".join(f"{k}: {f!r}" for k, f in sorted(self.modes.items()))
        return f"ConeFunction(n={self.dim}, degree={frac_str(self.degree)}, {{{body}}})"


# ----------------------------------------------------------------------------
# brackets and Hamiltonian fields


def poisson_bracket(f: ConeFunction, g: ConeFunction) -> ConeFunction:
    """{f, g} = sum_i d_{xi_i} f d_{x_i} g - d_{x_i} f d_{xi_i} g (exact)."""
    if f.dim != g.dim:
        raise InvalidInput("dimension mismatch")
    n = f.dim
    out = ConeFunction.zero(n, f.degree + g.degree - 1)
    for i in range(n):
        out = out + f.d_xi(i) * g.d_x(i) - f.d_x(i) * g.d_xi(i)
    return out


def hamiltonian_field(f: ConeFunction) -> dict:
    """X_f with iota_{X_f} omega = -df, as {variable index: coefficient}."""
    n = f.dim
    X = {}
    for i in range(n):
        a = f.d_xi(i)
        b = -f.d_x(i)
        if a:
            X[i] = a
        if b:
            X[n + i] = b
    return X


def apply_field(X: dict, g: ConeFunction) -> ConeFunction:
    out = None
    for v, c in X.items():
        t = c * g.partial(v)
        out = t if out is None else out + t
    return out if out is not None else ConeFunction.zero(g.dim)


def field_bracket(X: dict, Y: dict, n: int) -> dict:
    """[X, Y]^v = X(Y^v) - Y(X^v)."""
    out = {}
    for v in set(X) | set(Y):
        t = ConeFunction.zero(n)
        if v in Y:
            t = t + apply_field(X, Y[v])
        if v in X:
            t = t - apply_field(Y, X[v])
        if t:
            out[v] = t
    return out


def fields_equal(X: dict, Y: dict) -> bool:
    keys = set(X) | set(Y)
    for v in keys:
        a = X.get(v)
        b = Y.get(v)
        if a is None or b is None:
            if (a or b):
                return False
            continue
        if a != b:
            return False
    return True


# ----------------------------------------------------------------------------
# forms on the cone


class ConeForm(ExteriorForm):
    """Differential form on T*T^n minus 0 with ConeFunction coefficients."""

    def __init__(self, dim, p, coeffs=None):
        self.dim = dim
        super().__init__(2 * dim, p, coeffs or {})

    def _zero_coef(self, I):
        return ConeFunction.zero(self.dim)

    def _partial(self, c, var):
        return c.partial(var)

    def _new(self, p, coeffs):
        return ConeForm(self.dim, p, coeffs)

    @classmethod
    def function(cls, f):
        return cls(f.dim, 0, {(): f})

    @classmethod
    def dx(cls, n, i):
        return cls(n, 1, {(i,): ConeFunction.exp(n, (0,) * n)})

    @classmethod
    def dxi(cls, n, i):
        return cls(n, 1, {(n + i,): ConeFunction.exp(n, (0,) * n)})

    def times_function(self, f):
        return ConeForm(self.dim, self.p, {I: v * f for I, v in self.coeffs.items()})

    def __repr__(self):
        body = ", ".join(f"{I}: {c!r}" for I, c in sorted(self.coeffs.items()))
        return f"ConeForm(n={self.dim}, p={self.p}, {{{body}}})"


def symplectic_form(n) -> ConeForm:
    """omega = sum_i dxi_i ^ dx_i (stored as -dx_i ^ dxi_i)."""
    one = ConeFunction.exp(n, (0,) * n)
    return ConeForm(n, 2, {(i, n + i): -one for i in range(n)})


def symplectic_power(n, k) -> ConeForm:
    w = symplectic_form(n)
    out = ConeForm.function(ConeFunction.exp(n, (0,) * n))
    for _ in range(k):
        out = out.wedge(w)
    return out


def cone_liouville_field(n) -> dict:
    """X = sum_i xi_i d/dxi_i."""
    return {n + i: ConeFunction.fiber(HomogeneousFunction.coordinate(n, i)) for i in range(n)}


def liouville_one_form(n) -> ConeForm:
    """alpha = iota_X omega = sum_i xi_i dx_i."""
    return symplectic_form(n).interior(cone_liouville_field(n))


def _cosphere_integral(beta: ConeForm) -> ResidueValue:
    """int over T^n x S^{n-1}, oriented by dx_1..dx_n then the standard sphere."""
    n = beta.dim
    xs = tuple(range(n))
    tot = ResidueValue(n)
    acc = None
    for j in range(n):
        I = xs + tuple(n + i for i in range(n) if i != j)
        c = beta.coeffs.get(I)
        if c is None:
            continue
        f0 = c.zero_mode()
        if not f0:
            continue
        t = f0.times_coordinate(j)
        if j % 2:
            t = -t
        acc = t if acc is None else acc + t
    if acc is None:
        return tot
    # sphere mean of a homogeneous function = constant harmonic coefficient
    q = acc.constant_part()
    torus = PiSum.of(2 ** n, n * 2)  # (2 pi)^n
    return ResidueValue(n, (q * torus).parts)


def _orientation_sign(n):
    """Sign that makes i_Z^*(iota_X omega^n) positive on the cosphere bundle."""
    w = symplectic_power(n, n).interior(cone_liouville_field(n))
    v = _cosphere_integral(w).value()
    return 1 if mpmath.re(v) > 0 else -1


def symplectic_residue(f: ConeFunction) -> ResidueValue:
    """int_Z i_Z^*(f iota_X omega^n) with Z = {|xi| = 1}.

    Z is oriented so that i_Z^*(iota_X omega^n) is positive. Zero unless
    deg f = -n.
    """
    n = f.dim
    if f.degree != -n or not f:
        return ResidueValue(n)
    beta = symplectic_power(n, n).interior(cone_liouville_field(n)).times_function(f)
    r = _cosphere_integral(beta)
    return r if _orientation_sign(n) > 0 else r.scale(-1)


# ----------------------------------------------------------------------------
# spanning sets and bracket decomposition


def spanning_set(n, l) -> list[ConeFunction]:
    """3n functions of degree l whose differentials span the cotangent space.

    l != 0: |xi|^l cos x_i, |xi|^l sin x_i, xi_i |xi|^{l-1};
    l == 0: cos x_i, sin x_i, xi_i / |xi| (spanning tangentially to S*M).
    """
    l = to_fraction(l)
    rad = HomogeneousFunction.radial(n, l)
    out = []
    for i in range(n):
        out.append(ConeFunction.cos(n, i, rad))
    for i in range(n):
        out.append(ConeFunction.sin(n, i, rad))
    for i in range(n):
        out.append(ConeFunction.fiber(HomogeneousFunction.coordinate(n, i).times_radial(l - 1)))
    return out


@dataclass
class CosphereGrid:
    """Product grid of equispaced x on T^2 and equispaced angles on S^1."""

    nx: int = 32
    nphi: int = 64

    def __post_init__(self):
        if self.nx < 4 or self.nphi < 4:
            raise InvalidInput("grid sizes must be at least 4")

    @property
    def x_axis(self):
        return 2 * np.pi * np.arange(self.nx) / self.nx

    @property
    def phi_axis(self):
        return 2 * np.pi * np.arange(self.nphi) / self.nphi

    def x_points(self):
        a = self.x_axis
        X1, X2 = np.meshgrid(a, a, indexing="ij")
        return np.stack([X1.ravel(), X2.ravel()], axis=-1)

    def xi_points(self):
        p = self.phi_axis
        return np.stack([np.cos(p), np.sin(p)], axis=-1)

    def shape(self):
        return (self.nx, self.nx, self.nphi)

    @classmethod
    def parse(cls, spec):
        """'32x64' or (32, 64)."""
        if spec is None:
            return cls()
        if isinstance(spec, CosphereGrid):
            return spec
        if isinstance(spec, str):
            parts = spec.lower().replace("^2", "").replace("*", "x").split("x")
            nums = [int(p) for p in parts if p.strip()]
            if len(nums) == 2:
                return cls(nums[0], nums[1])
            if len(nums) == 3 and nums[0] == nums[1]:
                return cls(nums[0], nums[2])
            raise InvalidInput(f"cannot parse grid spec {spec!r}")
        nx, nphi = spec
        return cls(int(nx), int(nphi))


def _spectral_derivative(values, axis):
    N = values.shape[axis]
    k = np.fft.fftfreq(N, d=1.0 / N)
    if N % 2 == 0:
        k[N // 2] = 0
    shape = [1] * values.ndim
    shape[axis] = N
    return np.fft.ifft(np.fft.fft(values, axis=axis) * (1j * k).reshape(shape), axis=axis)


class GridFunction:
    """Samples of a degree-m function on T^2 x S^1, extended radially.

    ``values`` has shape (nx, nx, nphi): indices (x_1, x_2, angle).
    """

    def __init__(self, grid: CosphereGrid, values, degree):
        self.grid = grid
        self.values = np.asarray(values, dtype=complex).reshape(grid.shape())
        self.degree = to_fraction(degree)

    def d_x(self, i):
        return _spectral_derivative(self.values, i)

    def d_phi(self):
        return _spectral_derivative(self.values, 2)

    def d_xi(self, i):
        """xi-derivatives on |xi| = 1 from homogeneity and the angular derivative."""
        p = self.grid.phi_axis
        c, s = np.cos(p), np.sin(p)
        m = float(self.degree)
        dphi = self.d_phi()
        if i == 0:
            return m * self.values * c - dphi * s
        return m * self.values * s + dphi * c

    def sup_norm(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def to_csv(self, path_or_buf):
        """Rows: x1, x2, phi, re, im."""
        g = self.grid
        x = g.x_axis
        p = g.phi_axis
        lines = ["x1,x2,phi,re,im"]
        for a in range(g.nx):
            for b in range(g.nx):
                for c in range(g.nphi):
                    v = self.values[a, b, c]
                    lines.append(f"{x[a]!r},{x[b]!r},{p[c]!r},{v.real!r},{v.imag!r}")
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)


def _on_grid(f: ConeFunction, grid: CosphereGrid):
    return f(grid.x_points(), grid.xi_points()).reshape(grid.shape())


def frame_matrix(gs, grid: CosphereGrid):
    """Differentials dg_j at grid nodes: array (nodes, 2n, N), variables (x, xi)."""
    n = gs[0].dim
    cols = []
    for g in gs:
        comp = [_on_grid(g.partial(v), grid).ravel() for v in range(2 * n)]
        cols.append(np.stack(comp, axis=-1))
    return np.stack(cols, axis=-1)


def check_spanning(gs, grid: CosphereGrid, tangential=False, threshold=1e-8):
    """Verify the differential rank (2n, or 2n-1 tangentially) at every node.

    Returns the minimal relevant singular value.
    """
    n = gs[0].dim
    M = frame_matrix(gs, grid)
    if tangential:
        # drop the radial xi-direction: project the xi block onto the sphere tangent
        xi = np.tile(grid.xi_points(), (grid.nx * grid.nx, 1))
        P = np.zeros((M.shape[0], 2 * n, 2 * n))
        P[:, :n, :n] = np.eye(n)
        P[:, n:, n:] = np.eye(n)[None] - xi[:, :, None] * xi[:, None, :]
        M = P @ M
        need = 2 * n - 1
    else:
        need = 2 * n
    s = np.linalg.svd(M, compute_uv=False)
    smin = float(np.min(s[:, need - 1]))
    if smin < threshold:
        raise RankDeficient(
            f"differential rank drops below {need} (smallest singular value {smin:.3e})")
    return smin


def _lefschetz_matrix(n):
    """Matrix of theta -> theta ^ omega^{n-1} from 1-forms to (2n-1)-forms."""
    w = symplectic_power(n, n - 1)
    rows = [tuple(v for v in range(2 * n) if v != u) for u in range(2 * n)]
    idx = {I: r for r, I in enumerate(rows)}
    L = np.zeros((2 * n, 2 * n), dtype=complex)
    for a in range(2 * n):
        one = ConeFunction.exp(n, (0,) * n)
        th = ConeForm(n, 1, {(a,): one})
        t = th.wedge(w)
        for I, c in t.coeffs.items():
            L[idx[I], a] = complex(c.zero_mode().eval_mp([1] + [0] * (n - 1)))
    return L, rows


def euler_primitive_top(f: ConeFunction) -> ConeForm:
    """A (2n-1)-form beta with d beta = f omega^n.

    deg f != -n: beta = iota_X(f omega^n) / (deg f + n) (Euler identity).
    deg f == -n: beta = iota_V omega^n for a vector field V with div V = f,
    built from x-antiderivatives of the nonzero modes and the fiber
    decomposition of the zero mode (requires vanishing symplectic residue).
    """
    n = f.dim
    wn = symplectic_power(n, n)
    a = f.degree
    if a != -n:
        return wn.interior(cone_liouville_field(n)).times_function(f).scale(
            GaussRational(1) / (a + n))
    V = {}
    for k, F in f.modes.items():
        if any(k):
            i = next(t for t in range(n) if k[t])
            u = ConeFunction.fiber(F, k).scale(GaussRational(0, Fraction(-1, k[i])))
            V[i] = V[i] + u if i in V else u
        else:
            for h, G in F.parts.items():
                if G.constant_harmonic_coefficient():
                    raise ResidueObstruction(
                        "degree -n with nonzero symplectic residue: f omega^n is not exact")
                sig = decompose_derivatives(G)
                for j, s in enumerate(sig):
                    if s:
                        v = ConeFunction.fiber(ScaledHomogeneous.of(s, h))
                        V[n + j] = V[n + j] + v if (n + j) in V else v
    if not V:
        return ConeForm(n, 2 * n - 1, {})
    return wn.interior(V)


def _solve_frame(gs, grid, target, rank, post):
    """Pointwise minimal-norm solve of sum_j c_j dg_j = target at every node."""
    M = frame_matrix(gs, grid)  # (nodes, 2n, N)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    if np.min(s[:, rank - 1]) < 1e-8:
        raise RankDeficient("spanning frame is ill-conditioned on the grid")
    sinv = np.zeros_like(s)
    sinv[:, :rank] = 1.0 / s[:, :rank]
    coeffs = np.einsum("bji,bj,bkj,bk->bi", Vh.conj(), sinv, U.conj(), target, optimize=True)
    return coeffs * post


def _check_degrees(degree, l, m):
    if degree != l + m - 1:
        raise DegreeMismatch(
            f"deg f = {frac_str(degree)} but l + m - 1 = {frac_str(l + m - 1)}")


def bracket_decompose(f: ConeFunction, l, m, grid=None, tol=1e-6):
    """Write f = sum_j {g_j, f_j} with g_j exact of degree l, f_j sampled of degree m.

    Returns
    -------
    pairs : list of (ConeFunction, GridFunction)
    error : float
        Sup-norm relative reconstruction error on the grid.

    Raises
    ------
    DegreeMismatch, ResidueObstruction, ToleranceNotMet
    """
    n = f.dim
    if n != 2:
        raise Unsupported("grid-based bracket decomposition is implemented for n = 2")
    l, m = to_fraction(l), to_fraction(m)
    grid = CosphereGrid.parse(grid)
    if f:
        _check_degrees(f.degree, l, m)
    if not f:
        return [], 0.0
    if f.degree == -n:
        r = symplectic_residue(f)
        if not r.is_zero():
            raise ResidueObstruction(
                f"symplectic residue {r.render(12)} != 0 at degree -n")
    # with l = 0 and m != 0 the roles swap: g_j has degree m and f_j degree 0
    lg, mf = (m, l) if (l == 0 and m != 0) else (l, m)
    gs = spanning_set(n, lg)
    if lg != 0:
        beta = euler_primitive_top(f)
        L, rows = _lefschetz_matrix(n)
        B = np.stack([_on_grid(beta.coef(I), grid).ravel() if I in beta.coeffs
                      else np.zeros(grid.nx * grid.nx * grid.nphi, dtype=complex)
                      for I in rows], axis=-1)
        target = np.linalg.solve(L, (-B / n).T).T  # theta at the nodes
        coeffs = _solve_frame(gs, grid, target, 2 * n, 1.0)
    else:
        alpha = liouville_one_form(n).times_function(f)
        target = np.stack([_on_grid(alpha.coef((v,)), grid).ravel() for v in range(2 * n)],
                          axis=-1)
        coeffs = _solve_frame(gs, grid, target, 2 * n - 1, -1.0 / (n - 1))
    pairs = [(g, GridFunction(grid, coeffs[:, j], mf)) for j, g in enumerate(gs)]
    err = reconstruction_error(f, pairs, grid)
    if err > tol:
        raise ToleranceNotMet(f"reconstruction error {err:.3e} exceeds tol {tol:.1e}",
                              achieved=err)
    return pairs, err


def _grid_divergence_field(F: GridFunction):
    """Sampled field V with div V = F at degree -2 (F of zero cosphere mean).

    Nonzero x-modes get x-antiderivatives; the zero x-mode is
    r^{-1} B(phi) e_phi with B' = F restricted to the circle.
    Returns {variable index: values on the unit cosphere bundle}.
    """
    g = F.grid
    vals = np.fft.fft2(F.values, axes=(0, 1))
    k = np.fft.fftfreq(g.nx, d=1.0 / g.nx)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    V = {v: np.zeros(g.shape(), dtype=complex) for v in range(4)}
    use1 = K1 != 0
    use2 = (K1 == 0) & (K2 != 0)
    s1 = np.where(use1[..., None], vals / np.where(use1, 1j * K1, 1)[..., None], 0)
    s2 = np.where(use2[..., None], vals / np.where(use2, 1j * K2, 1)[..., None], 0)
    V[0] = np.fft.ifft2(s1, axes=(0, 1))
    V[1] = np.fft.ifft2(s2, axes=(0, 1))
    f0 = vals[0, 0, :] / (g.nx * g.nx)
    c = np.fft.fft(f0) / g.nphi
    kp = np.fft.fftfreq(g.nphi, d=1.0 / g.nphi)
    B = np.fft.ifft(np.where(kp != 0, c / np.where(kp != 0, 1j * kp, 1), 0)) * g.nphi
    p = g.phi_axis
    V[2] = np.broadcast_to(-np.sin(p) * B, g.shape()).astype(complex)
    V[3] = np.broadcast_to(np.cos(p) * B, g.shape()).astype(complex)
    return V, float(abs(c[0]))


def bracket_decompose_grid(F: GridFunction, l, tol=1e-6, residue_tol=None):
    """Grid-sampled analogue of ``bracket_decompose`` with g_j of degree l != 0.

    ``F`` carries samples of a degree-d function on T^2 x S^1; the f_j are
    returned with degree m = d - l + 1.

    Raises
    ------
    ResidueLeak
        At degree -2 when the sampled symplectic residue exceeds ``residue_tol``.
    """
    n = 2
    l = to_fraction(l)
    if l == 0:
        raise Unsupported("grid input with l = 0 is not supported")
    grid = F.grid
    d = F.degree
    m = d - l + 1
    gs = spanning_set(n, l)
    wn = symplectic_power(n, n)
    L, rows = _lefschetz_matrix(n)
    nodes = grid.nx * grid.nx * grid.nphi
    if d != -n:
        wx = wn.interior(cone_liouville_field(n))
        B = np.stack([(_on_grid(wx.coef(I), grid) * F.values).ravel() / float(d + n)
                      if I in wx.coeffs else np.zeros(nodes, dtype=complex)
                      for I in rows], axis=-1)
        leak = 0.0
    else:
        V, leak = _grid_divergence_field(F)
        scale = max(F.sup_norm(), 1e-300)
        if residue_tol is not None and leak > residue_tol * scale:
            raise ResidueLeak(f"sampled symplectic residue {leak:.3e} exceeds tolerance")
        B = np.zeros((nodes, 2 * n), dtype=complex)
        one = ConeFunction.exp(n, (0,) * n)
        for v, vals in V.items():
            bv = wn.interior({v: one})
            for r, I in enumerate(rows):
                if I in bv.coeffs:
                    c = complex(bv.coef(I).zero_mode().eval_mp([1, 0]))
                    B[:, r] += c * vals.ravel()
    target = np.linalg.solve(L, (-B / n).T).T
    coeffs = _solve_frame(gs, grid, target, 2 * n, 1.0)
    pairs = [(g, GridFunction(grid, coeffs[:, j], m)) for j, g in enumerate(gs)]
    acc = np.zeros(grid.shape(), dtype=complex)
    for g, Q in pairs:
        acc += grid_bracket(g, Q)
    err = float(np.max(np.abs(acc - F.values))) / max(F.sup_norm(), 1e-300)
    if err > tol:
        raise ToleranceNotMet(f"reconstruction error {err:.3e} exceeds tol {tol:.1e}",
                              achieved=err)
    return pairs, err


def grid_bracket(g: ConeFunction, F: GridFunction):
    """{g, F} on the grid with exact derivatives of g and spectral ones of F."""
    n = g.dim
    grid = F.grid
    out = np.zeros(grid.shape(), dtype=complex)
    for i in range(n):
        out += _on_grid(g.d_xi(i), grid) * F.d_x(i) - _on_grid(g.d_x(i), grid) * F.d_xi(i)
    return out


def reconstruction_error(f: ConeFunction, pairs, grid):
    target = _on_grid(f, grid)
    acc = np.zeros(grid.shape(), dtype=complex)
    for g, F in pairs:
        acc += grid_bracket(g, F)
    scale = max(float(np.max(np.abs(target))), 1e-300)
    return float(np.max(np.abs(acc - target))) / scale
