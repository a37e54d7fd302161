"""Matrix-valued operators on T^n and compressions by trigonometric idempotents."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInput, NotIdempotent, ReductionViolation
from .gaussian import frac_str, to_fraction
from .homog import HomogeneousFunction
from .psido import TRb, TorusPsiDO, compose, random_operator
from .symp import ConeFunction, CosphereGrid


class MatrixPsiDO:
    """N x N matrix of TorusPsiDO with common dimension, order and depth."""

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        N = len(rows)
        if N == 0 or any(len(r) != N for r in rows):
            raise InvalidInput("entries must form a square matrix")
        ref = next((e for r in rows for e in r if e is not None), None)
        if ref is None:
            raise InvalidInput("at least one entry must be given")
        self.N = N
        self.dim = ref.dim
        self.order = max(e.order for r in rows for e in r if e is not None)
        depth = max(e.as_order(self.order).depth for r in rows for e in r if e is not None)
        self.depth = depth
        self.entries = []
        for r in rows:
            out = []
            for e in r:
                if e is None:
                    e = TorusPsiDO.zero(self.dim, self.order, depth)
                e = e.as_order(self.order)
                if e.dim != self.dim:
                    raise InvalidInput("entries have different base dimensions")
                out.append(e)
            self.entries.append(out)

    @classmethod
    def tensor(cls, A: TorusPsiDO, E):
        """A (x) E for a numeric N x N matrix E."""
        E = np.asarray(E)
        N = E.shape[0]
        return cls([[A.scale(int(E[i, j])) if E[i, j] else None for j in range(N)]
                    for i in range(N)])

    @classmethod
    def diagonal(cls, ops):
        N = len(ops)
        return cls([[ops[i] if i == j else None for j in range(N)] for i in range(N)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __add__(self, other):
        return MatrixPsiDO([[self[i, j] + other[i, j] for j in range(self.N)]
                            for i in range(self.N)])

    def scale(self, c):
        return MatrixPsiDO([[e.scale(c) for e in r] for r in self.entries])

    def __sub__(self, other):
        return self + other.scale(-1)

    def components_equal(self, other, J=None):
        return all(self[i, j].components_equal(other[i, j], J)
                   for i in range(self.N) for j in range(self.N))

    def leading_is_zero(self):
        return all(not self[i, j].component(0) for i in range(self.N) for j in range(self.N))


def elementary(N, i, j):
    """The elementary matrix E_ij (0-based indices)."""
    E = np.zeros((N, N), dtype=int)
    E[i, j] = 1
    return E


def matrix_compose(A: MatrixPsiDO, B: MatrixPsiDO, J=None) -> MatrixPsiDO:
    if A.N != B.N:
        raise InvalidInput("matrix sizes differ")
    N = A.N
    out = []
    for i in range(N):
        row = []
        for j in range(N):
            acc = None
            for k in range(N):
                t = compose(A[i, k], B[k, j], J)
                acc = t if acc is None else acc + t
            row.append(acc)
        out.append(row)
    return MatrixPsiDO(out)


def matrix_commutator(A, B, J=None):
    return matrix_compose(A, B, J) - matrix_compose(B, A, J)


def tau_tensor_trN(tau, A: MatrixPsiDO) -> complex:
    """(tau (x) tr_N)(A) = sum_i tau(A_ii)."""
    return sum((complex(tau(A[i, i])) for i in range(A.N)), 0j)


def fiberwise_trace(s) -> ConeFunction:
    """tr of a square matrix of ConeFunctions of one degree."""
    N = len(s)
    if any(len(r) != N for r in s):
        raise InvalidInput("fiberwise trace needs a square matrix")
    out = s[0][0]
    for i in range(1, N):
        if s[i][i].degree != out.degree and s[i][i] and out:
            raise InvalidInput("entries have different degrees")
        out = out + s[i][i]
    return out


def symbol_matrix_product(s, t):
    N = len(s)
    return [[_sum_cones([s[i][k] * t[k][j] for k in range(N)]) for j in range(N)]
            for i in range(N)]


def _sum_cones(fs):
    out = fs[0]
    for f in fs[1:]:
        out = out + f
    return out


def random_scalar_operator(rng, n, order, depth=2, **kw) -> TorusPsiDO:
    """random_operator plus random radial zero-mode terms at every level.

    The extra terms keep residues and leading-symbol means generically
    nonzero, so that reduction checks are not vacuous.
    """
    order = to_fraction(order)
    kw.setdefault("modes", 1)
    A = random_operator(rng, n, order, depth, **kw)
    comps = []
    for j in range(depth + 1):
        c = int(rng.integers(1, 5)) * (1 if rng.random() < 0.5 else -1)
        comps.append(ConeFunction.fiber(HomogeneousFunction.radial(n, order - j, c)))
    return A + TorusPsiDO(n, order, comps)


def random_matrix_operator(rng, N, n, order, depth=2, **kw) -> MatrixPsiDO:
    return MatrixPsiDO([[random_scalar_operator(rng, n, order, depth, **kw) for _ in range(N)]
                        for _ in range(N)])


# ----------------------------------------------------------------------------
# hypertrace reduction


@dataclass
class Reduction:
    tau: object
    report: dict

    def __call__(self, A):
        return self.tau(A)


def reduce_hypertrace(T, a, N=2, n=2, trials=10, tol=1e-8, seed=0, depth=2) -> Reduction:
    """tau(A) := T(A (x) E_11), verified against the delta_ij pattern.

    Raises
    ------
    ReductionViolation
        If some T(A (x) E_ij) departs from delta_ij T(A (x) E_11) beyond ``tol``.
    """
    a = to_fraction(a)
    rng = np.random.default_rng(seed)

    def tau(A):
        return complex(T(MatrixPsiDO.tensor(A, elementary(N, 0, 0))))

    worst = 0.0
    for _ in range(trials):
        A = random_scalar_operator(rng, n, a, depth)
        t11 = tau(A)
        scale = max(1.0, abs(t11))
        for i in range(N):
            for j in range(N):
                v = complex(T(MatrixPsiDO.tensor(A, elementary(N, i, j))))
                dev = abs(v - (t11 if i == j else 0))
                worst = max(worst, dev / scale)
    if worst > tol:
        raise ReductionViolation(f"T(A x E_ij) deviates from delta_ij T(A x E_11) by {worst:.3e}")
    # consistency with tau (x) tr_N on random matrix operators
    mat_dev = 0.0
    for _ in range(max(1, trials // 2)):
        M = random_matrix_operator(rng, N, n, a, depth)
        v = complex(T(M))
        mat_dev = max(mat_dev, abs(v - tau_tensor_trN(tau, M)) / max(1.0, abs(v)))
    return Reduction(tau, {"order": frac_str(a), "N": N, "trials": trials,
                           "delta_deviation": worst, "tensor_deviation": mat_dev})


# ----------------------------------------------------------------------------
# idempotents


class Idempotent:
    """N x N matrix e(x) of trigonometric polynomials with e^2 = e."""

    def __init__(self, entries, grid=None):
        rows = [list(r) for r in entries]
        N = len(rows)
        if any(len(r) != N for r in rows):
            raise InvalidInput("idempotent must be square")
        self.N = N
        self.entries = []
        for r in rows:
            out = []
            for f in r:
                if not isinstance(f, ConeFunction):
                    raise InvalidInput("entries must be ConeFunctions of degree 0")
                if f and (f.degree != 0 or any(h.degree != 0 for h in f.modes.values())):
                    raise InvalidInput("entries must be trigonometric polynomials")
                out.append(f)
            self.entries.append(out)
        self.dim = next(f.dim for r in self.entries for f in r)
        for r in self.entries:
            for f in r:
                for F in f.modes.values():
                    P = F.pure()
                    if P is None or set(P.terms) - {0}:
                        raise InvalidInput("entries must not depend on xi")
        sq = symbol_matrix_product(self.entries, self.entries)
        for i in range(N):
            for j in range(N):
                if sq[i][j] != self.entries[i][j] and (sq[i][j] or self.entries[i][j]):
                    raise NotIdempotent(f"(e^2 - e)_{i + 1}{j + 1} is nonzero")
        self.rank = self._check_rank(grid)

    def _check_rank(self, grid):
        """tr e(x) is the rank; it must be one constant integer on the grid."""
        g = CosphereGrid.parse(grid)
        x = g.x_points()[:, :self.dim] if self.dim == 2 else \
            np.random.default_rng(0).uniform(0, 2 * np.pi, size=(64, self.dim))
        xi = np.eye(self.dim)[:1]
        tr = sum(self.entries[i][i](x, xi)[:, 0] for i in range(self.N))
        r = np.round(tr.real)
        if np.max(np.abs(tr - r)) > 1e-9 or np.ptp(r) != 0:
            raise NotIdempotent("rank of e(x) is not constant")
        return int(r[0])

    @classmethod
    def constant(cls, E, n=2):
        E = np.asarray(E)
        N = E.shape[0]
        return cls([[ConeFunction.exp(n, (0,) * n, int(E[i, j])) if E[i, j]
                     else ConeFunction.zero(n) for j in range(N)] for i in range(N)])

    @classmethod
    def identity(cls, N, n=2):
        return cls.constant(np.eye(N, dtype=int), n)

    @classmethod
    def rotated_projection(cls, n=2):
        """R(x_1) diag(1, 0) R(x_1)^T: [[cos^2, cos sin], [cos sin, sin^2]]."""
        half = Fraction(1, 2)
        one = ConeFunction.exp(n, (0,) * n)
        c2 = ConeFunction.cos(n, 0, HomogeneousFunction.constant(n, 1))
        c2 = ConeFunction(n, 0, {tuple(2 * v for v in k): f for k, f in c2.modes.items()})
        s2 = ConeFunction.sin(n, 0, HomogeneousFunction.constant(n, 1))
        s2 = ConeFunction(n, 0, {tuple(2 * v for v in k): f for k, f in s2.modes.items()})
        return cls([[(one + c2).scale(half), s2.scale(half)],
                    [s2.scale(half), (one - c2).scale(half)]])

    def as_operator(self, depth=0) -> MatrixPsiDO:
        return MatrixPsiDO([[TorusPsiDO.from_symbol(f, depth) if f else
                             TorusPsiDO.zero(self.dim, 0, depth) for f in r]
                            for r in self.entries])

    def to_json(self):
        return {"N": self.N, "entries": [[f.to_json() for f in r] for r in self.entries]}


def compress(e: Idempotent, A: MatrixPsiDO, J=None) -> MatrixPsiDO:
    """eAe through compose at A's depth."""
    J = A.depth if J is None else J
    E = e.as_operator(J)
    return matrix_compose(matrix_compose(E, A, J), E, J)


@dataclass
class TauEValue:
    value: complex
    idempotent: dict = field(repr=False, default=None)

    def __complex__(self):
        return complex(self.value)


def tau_E(tau_N, e: Idempotent, A: MatrixPsiDO) -> TauEValue:
    """tau_E(A) = tau_N(eAe), reported together with e."""
    return TauEValue(complex(tau_N(compress(e, A))), e.to_json())


def TRb_E(e: Idempotent, A: MatrixPsiDO, a=None, R=48) -> TauEValue:
    """(TRb_a (x) tr_N)_E with the same dispatch on the declared order a."""
    a = A.order if a is None else to_fraction(a)
    return tau_E(lambda M: tau_tensor_trN(lambda X: TRb(X, a, R).value, M), e, A)


def noncommuting_pair(n=2, a=0, depth=1):
    """Matrix operators whose commutator has a nonzero order-2a leading term.

    A = Op(chi |xi|^a) (x) E_12 and B = Op(chi |xi|^a) (x) E_21, so the
    leading symbol of [A, B] is |xi|^{2a} (E_11 - E_22).
    """
    L = TorusPsiDO.from_symbol(ConeFunction.fiber(HomogeneousFunction.radial(n, a)), depth)
    A = MatrixPsiDO.tensor(L, elementary(2, 0, 1))
    B = MatrixPsiDO.tensor(L, elementary(2, 1, 0))
    return A, B


def check_compression_hypertrace(tau_N, e: Idempotent, a, trials=5, seed=0, n=2, J=0):
    """max |tau_E([eAe, eBe])| over random A in CL^0, B in CL^a (matrix-valued).

    ``J`` is the number of expansion levels carried below the leading
    order. J = 0 is enough for the residue trace at a = -n and for
    leading-symbol traces; the compressions make deeper levels costly.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        A = random_matrix_operator(rng, e.N, n, 0, J)
        B = random_matrix_operator(rng, e.N, n, a, J)
        eAe = compress(e, A, J)
        eBe = compress(e, B, J)
        C = matrix_commutator(eAe, eBe, J)
        worst = max(worst, abs(tau_E(tau_N, e, C).value))
    return worst


__all__ = ["MatrixPsiDO", "elementary", "matrix_compose", "matrix_commutator",
           "tau_tensor_trN", "fiberwise_trace", "symbol_matrix_product", "reduce_hypertrace",
           "Reduction", "Idempotent", "compress", "tau_E", "TauEValue", "TRb_E",
           "noncommuting_pair", "check_compression_hypertrace", "random_scalar_operator",
           "random_matrix_operator"]
