import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conetrace.bundle import (Idempotent, MatrixPsiDO, TRb_E, check_compression_hypertrace,
                              compress, elementary, fiberwise_trace, matrix_commutator,
                              matrix_compose, noncommuting_pair, random_matrix_operator,
                              random_scalar_operator, reduce_hypertrace, symbol_matrix_product,
                              tau_E, tau_tensor_trN)
from conetrace.errors import InvalidInput, NotIdempotent, ReductionViolation
from conetrace.homog import HomogeneousFunction
from conetrace.psido import TRb, TorusPsiDO, residue_trace
from conetrace.suites import elementary_relations
from conetrace.symp import ConeFunction

seeds = st.integers(0, 2**32 - 1)


def res(X):
    return complex(residue_trace(X).value())


def res_N(M):
    return tau_tensor_trN(res, M)


def test_elementary_relations_exhaustive():
    assert elementary_relations(4) == 0
    assert np.array_equal(sum(elementary(3, i, i) for i in range(3)), np.eye(3, dtype=int))


def test_tensor_trace_examples():
    A = TorusPsiDO.from_symbol(HomogeneousFunction.radial(2, -2))
    assert abs(res_N(MatrixPsiDO.tensor(A, np.eye(3, dtype=int))) - 6 * np.pi) < 1e-12
    assert res_N(MatrixPsiDO.tensor(A, elementary(2, 0, 1))) == 0
    D = MatrixPsiDO.diagonal([A, A.scale(2)])
    assert abs(res_N(D) - 6 * np.pi) < 1e-12


@settings(max_examples=8)
@given(seeds)
def test_fiberwise_trace_kills_commutators(seed):
    rng = np.random.default_rng(seed)
    from conetrace.psido import random_cone_function
    s = [[random_cone_function(rng, 2, 0, modes=1) for _ in range(2)] for _ in range(2)]
    t = [[random_cone_function(rng, 2, -1, modes=1) for _ in range(2)] for _ in range(2)]
    st_, ts = symbol_matrix_product(s, t), symbol_matrix_product(t, s)
    diff = [[st_[i][j] - ts[i][j] for j in range(2)] for i in range(2)]
    assert fiberwise_trace(diff).is_zero()
    f = random_cone_function(rng, 2, 0, modes=1)
    I_f = [[f if i == j else ConeFunction.zero(2, 0) for j in range(3)] for i in range(3)]
    assert fiberwise_trace(I_f) == f.scale(3)
    with pytest.raises(InvalidInput):
        fiberwise_trace([[f, f]])


@settings(max_examples=5)
@given(seeds)
def test_tensor_hypertrace_on_commutators(seed):
    rng = np.random.default_rng(seed)
    A = random_matrix_operator(rng, 2, 2, 0, 2)
    B = random_matrix_operator(rng, 2, 2, -2, 2)
    assert abs(res_N(matrix_commutator(A, B, 2))) <= 1e-8


def test_matrix_compose_matches_entries():
    rng = np.random.default_rng(3)
    A = random_matrix_operator(rng, 2, 2, 0, 1)
    B = random_matrix_operator(rng, 2, 2, -1, 1)
    from conetrace.psido import compose
    C = matrix_compose(A, B, 1)
    ref = compose(A[1, 0], B[0, 1], 1) + compose(A[1, 1], B[1, 1], 1)
    assert C[1, 1].components_equal(ref)


def test_reduction_recovers_residue():
    red = reduce_hypertrace(res_N, -2, trials=5)
    assert red.report["delta_deviation"] <= 1e-8
    assert red.report["tensor_deviation"] <= 1e-8
    A = random_scalar_operator(np.random.default_rng(2), 2, -2, 2)
    assert abs(res(A)) > 1e-3
    assert abs(red(A) - res(A)) <= 1e-12


def test_reduction_violation():
    with pytest.raises(ReductionViolation):
        reduce_hypertrace(lambda M: res(M[0, 1]), -2, trials=3)


def test_noncommuting_pair_order_2a():
    A, B = noncommuting_pair(a=-1)
    C = matrix_commutator(A, B)
    assert C.order == -2
    l0, l1 = C[0, 0].component(0), C[1, 1].component(0)
    assert l0 == ConeFunction.fiber(HomogeneousFunction.radial(2, -2))
    assert l1 == -l0
    assert C[0, 1].component(0).is_zero()


def test_idempotent_validation():
    e = Idempotent.rotated_projection()
    assert e.rank == 1
    assert Idempotent.identity(3).rank == 3
    with pytest.raises(NotIdempotent):
        Idempotent.constant([[1, 1], [1, 0]])
    with pytest.raises(InvalidInput):
        Idempotent([[ConeFunction.fiber(HomogeneousFunction.coordinate(2, 0)
                                        .times_radial(-1))]])


def test_tau_e_constant_projections():
    rng = np.random.default_rng(1)
    M = MatrixPsiDO([[random_scalar_operator(rng, 2, -2, 2) for _ in range(2)]
                     for _ in range(2)])
    assert abs(res(M[0, 0])) > 1e-3
    top = tau_E(res_N, Idempotent.constant([[1, 0], [0, 0]]), M)
    assert abs(top.value - res(M[0, 0])) < 1e-12
    assert top.idempotent["N"] == 2
    full = tau_E(res_N, Idempotent.identity(2), M)
    assert abs(full.value - res_N(M)) < 1e-12
    # declared order -2 on T^2 dispatches to Trt entrywise
    trb = TRb_E(Idempotent.identity(2), M)
    ref = sum(TRb(M[i, i], -2).value for i in range(2))
    assert abs(trb.value - ref) < 1e-10 and abs(ref) > 1e-3


def test_rotated_compression_hypertrace():
    e = Idempotent.rotated_projection()
    assert check_compression_hypertrace(res_N, e, -2, trials=2) <= 1e-8
    M = MatrixPsiDO.tensor(TorusPsiDO.from_symbol(HomogeneousFunction.radial(2, -2)),
                           np.eye(2, dtype=int))
    # e M e = e (x) |xi|^-2 to leading order, so the residue sees rank(e) = 1
    assert abs(res_N(compress(e, M, 0)) - 2 * np.pi) < 1e-12
