from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conetrace.errors import OrderOutOfSupportedRange, OrderTooHigh, UnsupportedOrder
from conetrace.gaussian import GaussRational
from conetrace.homog import HomogeneousFunction
from conetrace.psido import (TRb, TorusPsiDO, apply, commutator, compose, normalized_Q0,
                             op_trace, random_operator, reg_trace_TR, residue_trace,
                             smoothing_R0, trb_branch, trt_ext)
from conetrace.symp import ConeFunction, poisson_bracket

seeds = st.integers(0, 2**32 - 1)

# Epstein zeta values sum_{xi != 0} |xi|^b = 4 zeta(-b/2) beta(-b/2), computed with mpmath
EPSTEIN = {Fraction(-4): 6.0268120396919401235, Fraction(-3, 2): -10.077559478793152101,
           Fraction(-5, 2): 15.238322944663087012, Fraction(-3): 9.0336216831009503057}
LOG_CONSTANT = 2.5849817595792532171      # Trt of Op(chi |xi|^-2)
THETA_SQUARED = 3.1422426599356463391     # theta_3(0, e^-1)^2


def radial_op(b):
    return TorusPsiDO.from_symbol(HomogeneousFunction.radial(2, b))


def test_epstein_oracle_itself():
    with mpmath.workdps(25):
        s = mpmath.mpf(2)
        assert abs(4 * mpmath.zeta(s) * mpmath.catalan - EPSTEIN[Fraction(-4)]) < 1e-15


@pytest.mark.parametrize("b", [Fraction(-4), Fraction(-3), Fraction(-5, 2)])
def test_l2_trace_epstein(b):
    r = op_trace(radial_op(b))
    assert abs(r.value - EPSTEIN[b]) < 1e-8
    assert r.error < 1e-8


@pytest.mark.parametrize("b", [Fraction(-3, 2), Fraction(-5, 2)])
def test_regularized_trace_epstein(b):
    r = reg_trace_TR(radial_op(b))
    assert abs(r.value - EPSTEIN[b]) < 1e-8


def test_smoothing_trace_theta():
    assert abs(op_trace(smoothing_R0(2)).value - THETA_SQUARED) < 1e-12


def test_trt_log_constant():
    assert abs(trt_ext(radial_op(-2)).value - LOG_CONSTANT) < 1e-8


def test_trace_support_guards():
    with pytest.raises(OrderTooHigh):
        op_trace(radial_op(-2))
    with pytest.raises(OrderOutOfSupportedRange):
        reg_trace_TR(radial_op(Fraction(-1, 2)))
    with pytest.raises(OrderOutOfSupportedRange):
        reg_trace_TR(radial_op(-2))


@pytest.mark.parametrize("a,branch", [(-3, "TR"), (Fraction(-3, 2), "TR"), (-2, "Trt"),
                                      (-1, "Trt"), (0, "Res"), (1, "Res")])
def test_trb_branch(a, branch):
    assert trb_branch(a, 2) == branch


def test_trb_dispatch_values():
    assert abs(TRb(radial_op(-4)).value - EPSTEIN[Fraction(-4)]) < 1e-8
    assert abs(TRb(radial_op(-2)).value - LOG_CONSTANT) < 1e-8
    assert abs(TRb(radial_op(-2), a=0).value - 2 * np.pi) < 1e-12
    with pytest.raises(UnsupportedOrder):
        trb_branch(Fraction(1, 2), 2)


def test_q0_normalization():
    assert abs(complex(residue_trace(normalized_Q0(2)).value()) - 1) < 1e-14
    assert residue_trace(normalized_Q0(3)).render(10).startswith("1")


def test_apply_multiplier_and_modes():
    X1 = TorusPsiDO.from_symbol(HomogeneousFunction.coordinate(2, 0), 2)
    assert apply(X1, {(3, 1): 1}) == {(3, 1): 3}
    E = TorusPsiDO.from_symbol(ConeFunction.exp(2, (1, 0)), 2)
    assert apply(E, {(0, 2): 2}) == {(1, 2): 2}


@settings(max_examples=10)
@given(seeds)
def test_compose_matches_application(seed):
    rng = np.random.default_rng(seed)
    A = random_operator(rng, 2, Fraction(1, 2), 2)
    B = random_operator(rng, 2, Fraction(-1), 2)
    u = {(30, 21): 1, (0, -40): 2j}
    lhs, rhs = apply(compose(A, B, 6), u), apply(A, apply(B, u))
    # truncation leaves O(|xi|^{-7}) on modes of size ~ 40
    for k in set(lhs) | set(rhs):
        assert abs(lhs.get(k, 0) - rhs.get(k, 0)) < 1e-6 * (1 + abs(rhs.get(k, 0)))


@settings(max_examples=10)
@given(seeds)
def test_commutator_leading_symbol(seed):
    rng = np.random.default_rng(seed)
    A = random_operator(rng, 2, Fraction(1, 2), 1, modes=1)
    B = random_operator(rng, 2, Fraction(-1), 1, modes=1)
    C = commutator(A, B, 1)
    assert C.component(0).is_zero()
    pb = poisson_bracket(A.component(0), B.component(0)).scale(GaussRational(0, -1))
    assert C.component(1) == pb


def test_l2_trace_of_commutator_vanishes():
    rng = np.random.default_rng(8)
    A = random_operator(rng, 2, Fraction(-1, 2), 2, modes=1)
    B = random_operator(rng, 2, Fraction(-3, 2), 2, modes=1)
    r = op_trace(commutator(A, B), tol=1e-8)
    assert abs(r.value) <= 1e-8


def test_json_round_trip():
    A = random_operator(np.random.default_rng(1), 2, Fraction(-1, 2), 2)
    assert TorusPsiDO.from_json(A.to_json()).components_equal(A)
