"""Trace functionals on operator classes and the classification fitters.

A ``TraceFunctional`` is a linear map on operators of one declared order.
Hypertraces of order a are of the form lambda * TRb_a + T o sigma_a (or
lambda * Res + T o sigma_a for integers a > -n); traces on CL^a with
a in Z_{<=0} add finitely many lower symbol functionals. The fitters probe a
functional on reference operators and read off lambda and T on a finite
basis of leading symbols.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import InvalidInput, UnsupportedOrder
from .gaussian import frac_str, to_fraction
from .homog import HomogeneousFunction
from .poly import Poly
from .psido import (TorusPsiDO, TRb, commutator, compose, normalized_Q0, op_trace,
                    random_operator, reg_trace_TR, residue_trace, smoothing_R0, trb_branch,
                    trt_ext)
from .symp import ConeFunction, CosphereGrid, _on_grid

KINDS = ("L2", "Res", "TRreg", "TrtExt", "TRb", "LeadingSymbol", "Quotient", "UserCallable")


@dataclass
class TraceFunctional:
    """Linear functional on operators of declared order ``order``.

    ``order = None`` means the functional is evaluated on operators as given
    (L2 trace, residue). Otherwise inputs are re-declared at ``order``.
    """

    kind: str
    order: Fraction | None
    evaluator: Callable
    weight: complex = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown functional kind {self.kind!r}")
        if self.order is not None:
            self.order = to_fraction(self.order)

    def __call__(self, A: TorusPsiDO) -> complex:
        if self.order is not None:
            A = A.as_order(self.order)
        return self.weight * complex(self.evaluator(A))

    def __rmul__(self, c):
        return TraceFunctional(self.kind, self.order, self.evaluator, self.weight * c,
                               dict(self.params))

    __mul__ = __rmul__

    def __add__(self, other):
        order = self.order if self.order is not None else other.order

        def ev(A, s=self, o=other):
            return s(A) + o(A)
        return TraceFunctional("UserCallable", order, ev, 1.0,
                               {"sum": [self.kind, other.kind]})

    def __sub__(self, other):
        return self + (-1) * other

    def describe(self):
        return {"kind": self.kind,
                "order": None if self.order is None else frac_str(self.order),
                "weight": [self.weight.real, self.weight.imag]
                if isinstance(self.weight, complex) else self.weight}


def l2_trace(R=48) -> TraceFunctional:
    return TraceFunctional("L2", None, lambda A: op_trace(A, R).value)


def residue_functional(order=None) -> TraceFunctional:
    return TraceFunctional("Res", order, lambda A: complex(residue_trace(A).value()))


def tr_functional(a, R=48) -> TraceFunctional:
    return TraceFunctional("TRreg", a, lambda A: reg_trace_TR(A, R).value)


def trt_functional(a, R=48) -> TraceFunctional:
    return TraceFunctional("TrtExt", a, lambda A: trt_ext(A, R).value)


def trb_functional(a, n=2, R=48) -> TraceFunctional:
    a = to_fraction(a)
    return TraceFunctional("TRb", a, lambda A: TRb(A, a, R).value,
                           params={"branch": trb_branch(a, n)})


def user_functional(fn, a=None) -> TraceFunctional:
    return TraceFunctional("UserCallable", a, fn)


# ----------------------------------------------------------------------------
# leading-symbol functionals


def sphere_mean(f: ConeFunction) -> complex:
    """Mean of f over T^n x S^{n-1} (the constant harmonic part of the zero mode)."""
    return complex(f.zero_mode().constant_part().value())


def point_evaluation(x, omega):
    """T(f) = f(x, omega) for one point of the cosphere bundle."""
    x = np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)

    def T(f):
        return complex(f.eval_point(x, omega))
    return T


def density_functional(weight, grid=None):
    """T(f) = grid mean of weight * f over T^2 x S^1.

    ``weight`` is a callable (x (A,2), xi (B,2)) -> (A,B) array, for instance
    a ConeFunction of degree 0.
    """
    grid = CosphereGrid.parse(grid)
    w = np.asarray(weight(grid.x_points(), grid.xi_points())).reshape(grid.shape())

    def T(f):
        if not f:
            return 0j
        return complex(np.mean(w * _on_grid(f, grid)))
    return T


def make_leading_symbol_trace(T, a) -> TraceFunctional:
    """tau(A) = T(sigma_a(A))."""
    a = to_fraction(a)
    return TraceFunctional("LeadingSymbol", a, lambda A: T(A.symbol_of_degree(a)),
                           params={"T": getattr(T, "__name__", "T")})


# ----------------------------------------------------------------------------
# verification


def _lambda_operator(n, s, J):
    f = ConeFunction.fiber(HomogeneousFunction.radial(n, s))
    return TorusPsiDO.from_symbol(f, J)


def four_commutator_identity(A, B, J):
    """Check 2[A,B] = [A L, L^-1 B] + [L A, B L^-1] + [A B L^-1, L] + [L^-1 B A, L].

    L = Op(chi |xi|). Returns (exact, max_abs) on the expansion through depth J.
    """
    n = A.dim
    L = _lambda_operator(n, 1, J)
    Li = _lambda_operator(n, -1, J)
    lhs = commutator(A, B, J).scale(2)
    terms = [
        commutator(compose(A, L, J), compose(Li, B, J), J),
        commutator(compose(L, A, J), compose(B, Li, J), J),
        commutator(compose(compose(A, B, J), Li, J), L, J),
        commutator(compose(compose(Li, B, J), A, J), L, J),
    ]
    rhs = terms[0]
    for t in terms[1:]:
        rhs = rhs + t
    diff = rhs - lhs
    exact = all(not c for c in diff.components)
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 2 * np.pi, size=(4, n))
    xi = rng.normal(size=(4, n))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    big = max((float(np.max(np.abs(c(x, xi)))) for c in diff.components if c), default=0.0)
    return exact, big


def verify_hypertrace(tau, a, trials=10, tol=1e-8, seed=0, n=2, mode="hypertrace", J=4,
                      identity_trials=1):
    """Sample max |tau([A,B])| over random pairs.

    mode: 'hypertrace' (A in CL^0, B in CL^a), 'pretrace' (A, B in CL^{a/2})
    or 'trace' (A, B in CL^a). Also checks the four-commutator identity.
    Returns a report dict; never raises on failure.
    """
    a = to_fraction(a)
    rng = np.random.default_rng(seed)
    if mode == "hypertrace":
        oa, ob = Fraction(0), a
    elif mode == "pretrace":
        oa = ob = a / 2
    elif mode == "trace":
        oa = ob = a
    else:
        raise InvalidInput(f"unknown mode {mode!r}")
    worst = 0.0
    values = []
    for _ in range(trials):
        A = random_operator(rng, n, oa, J)
        B = random_operator(rng, n, ob, J)
        C = commutator(A, B, J)
        v = complex(tau(C))
        values.append(v)
        worst = max(worst, abs(v))
    ident_exact = True
    ident_err = 0.0
    for _ in range(identity_trials):
        A = random_operator(rng, n, 0, min(J, 2), modes=1, harmonics=1)
        B = random_operator(rng, n, ob, min(J, 2), modes=1, harmonics=1)
        ex, err = four_commutator_identity(A, B, min(J, 2))
        ident_exact = ident_exact and ex
        ident_err = max(ident_err, err)
    return {"mode": mode, "order": frac_str(a), "trials": trials, "tol": tol,
            "max_violation": worst, "passed": bool(worst <= tol and ident_exact),
            "identity_exact": ident_exact, "identity_error": ident_err,
            "values": values}


# ----------------------------------------------------------------------------
# fitters


def probe_basis(n, a):
    """Documented probe leading symbols of degree a: x-modes times low harmonics."""
    a = to_fraction(a)
    xs = [("1", ConeFunction.exp(n, (0,) * n)),
          ("cos(x1)", ConeFunction.cos(n, 0)),
          ("sin(x2)", ConeFunction.sin(n, 1 % n)),
          ("e^{i(x1-x2)}", ConeFunction.exp(n, (1, -1) + (0,) * (n - 2)))]
    v = [Poly.var(n, i) for i in range(n)]
    fibers = [("1", HomogeneousFunction.constant(n)),
              ("xi1/|xi|", HomogeneousFunction.from_poly(v[0], -1)),
              ("xi2/|xi|", HomogeneousFunction.from_poly(v[1], -1)),
              ("(xi1^2-xi2^2)/|xi|^2",
               HomogeneousFunction.from_poly(v[0] * v[0] - v[1] * v[1], -2))]
    out = []
    for lx, fx in xs:
        for lf, ff in fibers:
            s = (fx * ConeFunction.fiber(ff)).times_radial(a)
            out.append((f"{lx}*{lf}", s))
    return out


@dataclass
class HypertraceFit:
    lam: complex
    samples: dict
    branch: str
    order: Fraction

    def __iter__(self):
        return iter((self.lam, self.samples))


def _probe_op(s: ConeFunction, a, j=0):
    return TorusPsiDO(s.dim, a, [None] * j + [s])


def _lambda_branch(a, n):
    if a.denominator == 1 and a > -n:
        return "Res"
    trb_branch(a, n)  # raises UnsupportedOrder outside the table
    return "smoothing"


def fit_hypertrace(tau, a, n=2, R=48) -> HypertraceFit:
    """Recover (lambda, T on probes) from a hypertrace of order a.

    Res branch (a in Z, a > -n): lambda = tau(Q0), reference Res.
    Otherwise: lambda = tau(R0) / Tr(R0), reference TRb_a.
    """
    a = to_fraction(a)
    branch = _lambda_branch(a, n)
    if branch == "Res":
        lam = complex(tau(normalized_Q0(n).as_order(a)))

        def ref(P):
            return complex(residue_trace(P).value())
    else:
        R0 = smoothing_R0(n)
        lam = complex(tau(R0.as_order(a))) / op_trace(R0, R).value

        def ref(P):
            return TRb(P, a, R).value
    samples = {}
    for label, s in probe_basis(n, a):
        P = _probe_op(s, a)
        samples[label] = complex(tau(P)) - lam * ref(P)
    return HypertraceFit(lam, samples, branch, a)


def build_trace_from_classification(lam, Ts, a, n=2, R=48) -> TraceFunctional:
    """tau(A) = lam TRb_a(A) + sum_j T_j(c_j(A)) on CL^a for a in Z_{<=0}.

    ``Ts`` holds |a| + 1 callables; T_j acts on degree-(a - j) ConeFunctions.
    The right inverses are Op(chi .) per component, so c_j(A) is the j-th
    component of A viewed at order a.
    """
    a = to_fraction(a)
    if a.denominator != 1 or a > 0:
        raise UnsupportedOrder("quotient-form traces need a in Z_{<=0}")
    if len(Ts) != int(-a) + 1:
        raise InvalidInput(f"need {int(-a) + 1} symbol functionals, got {len(Ts)}")
    lam = complex(lam)

    def ev(A):
        v = lam * TRb(A, a, R).value if lam else 0j
        for j, T in enumerate(Ts):
            c = A.component(j)
            if c:
                v += complex(T(c))
        return v
    return TraceFunctional("Quotient", a, ev, params={"lambda": lam, "terms": len(Ts)})


@dataclass
class TraceFit:
    lam: complex
    samples: list
    order: Fraction

    def __iter__(self):
        return iter((self.lam, self.samples))


def fit_trace(tau, a, n=2, R=48) -> TraceFit:
    """Invert ``build_trace_from_classification`` by probing.

    lambda comes from the restriction to CL^{2a}: tau(Q0) when 2a > -n,
    otherwise tau(R0) / Tr(R0). The T_j are then peeled on probes of degree
    a - j: T_j(s) = tau(P) - lambda TRb_a(P).
    """
    a = to_fraction(a)
    if a.denominator != 1 or a > 0:
        raise UnsupportedOrder("fit_trace needs a in Z_{<=0}")
    if 2 * a > -n:
        lam = complex(tau(normalized_Q0(n).as_order(a)))
    else:
        R0 = smoothing_R0(n)
        lam = complex(tau(R0.as_order(a))) / op_trace(R0, R).value
    samples = []
    for j in range(int(-a) + 1):
        row = {}
        for label, s in probe_basis(n, a - j):
            P = _probe_op(s, a, j)
            row[label] = complex(tau(P)) - lam * TRb(P, a, R).value
        samples.append(row)
    return TraceFit(lam, samples, a)
