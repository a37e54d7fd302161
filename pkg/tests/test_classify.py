from fractions import Fraction

import numpy as np
import pytest

from conetrace.classify import (TraceFunctional, build_trace_from_classification,
                                density_functional, fit_hypertrace, fit_trace, l2_trace,
                                make_leading_symbol_trace, point_evaluation, probe_basis,
                                residue_functional, sphere_mean, user_functional,
                                verify_hypertrace)
from conetrace.errors import InvalidInput, UnsupportedOrder
from conetrace.homog import HomogeneousFunction
from conetrace.psido import TorusPsiDO, normalized_Q0
from conetrace.suites import _synthetic_hypertrace
from conetrace.symp import ConeFunction


def test_residue_is_a_hypertrace():
    r = verify_hypertrace(residue_functional(), -2, trials=3, J=4)
    assert r["passed"] and r["identity_exact"]


def test_leading_symbol_functional_versus_subleading():
    # sigma_a([A, B]) = 0 when ord A = 0, so T o sigma_a is a hypertrace; reading
    # the next component instead sees (1/i){f, g} and is not
    T = point_evaluation((0.3, 1.1), (1, 0.5))
    tau = make_leading_symbol_trace(T, -2)
    r = verify_hypertrace(tau, -2, trials=3, J=2)
    assert r["max_violation"] <= 1e-12
    bad = TraceFunctional("UserCallable", -2, lambda A: T(A.component(1)))
    assert not verify_hypertrace(bad, -2, trials=3, J=3)["passed"]


def test_functional_algebra():
    A = TorusPsiDO.from_symbol(HomogeneousFunction.radial(2, -2))
    tau = 2 * residue_functional() - residue_functional()
    assert abs(tau(A) - 2 * np.pi) < 1e-12
    with pytest.raises(InvalidInput):
        TraceFunctional("nonsense", None, lambda A: 0)
    assert abs(user_functional(lambda A: 3.0)(A) - 3) < 1e-15


def test_sphere_mean_and_density():
    f = ConeFunction.fiber(HomogeneousFunction.constant(2)) + ConeFunction.cos(2, 0)
    assert abs(sphere_mean(f) - 1) < 1e-14
    T = density_functional(lambda x, xi: np.ones((x.shape[0], xi.shape[0])), "8x16")
    assert abs(T(f) - 1) < 1e-12


def test_probe_basis_degrees():
    labels = [lab for lab, _ in probe_basis(2, Fraction(-3, 2))]
    assert len(labels) == len(set(labels)) == 16
    assert all(s.degree == Fraction(-3, 2) for _, s in probe_basis(2, Fraction(-3, 2)))


@pytest.mark.parametrize("a", [Fraction(0), Fraction(-3, 2), Fraction(-2)])
def test_fit_hypertrace_round_trip(a):
    lam = 2 - 1j
    tau, T = _synthetic_hypertrace(a, lam)
    fit = fit_hypertrace(tau, a)
    assert abs(fit.lam - lam) <= 1e-8
    assert max(abs(fit.samples[lab] - T(s)) for lab, s in probe_basis(2, a)) <= 1e-6


def test_res_branch_lambda_is_tau_q0():
    tau, _ = _synthetic_hypertrace(Fraction(0), 3)
    fit = fit_hypertrace(tau, 0)
    assert fit.branch == "Res"
    assert fit.lam == complex(tau(normalized_Q0(2).as_order(0)))


def test_quotient_round_trip():
    a = Fraction(-1)
    Ts = [point_evaluation((0.2, 0.4), (1, 0)), point_evaluation((1.0, 0.1), (0.3, 1))]
    q = build_trace_from_classification(1.5, Ts, a)
    tf = fit_trace(q, a)
    assert abs(tf.lam - 1.5) <= 1e-8
    for j, T in enumerate(Ts):
        assert max(abs(tf.samples[j][lab] - T(s)) for lab, s in probe_basis(2, a - j)) <= 1e-6
    with pytest.raises(InvalidInput):
        build_trace_from_classification(1, Ts[:1], a)
    with pytest.raises(UnsupportedOrder):
        build_trace_from_classification(1, Ts, Fraction(-1, 2))


def test_l2_trace_functional():
    A = TorusPsiDO.from_symbol(HomogeneousFunction.radial(2, -4))
    assert abs(l2_trace()(A) - 6.0268120396919401235) < 1e-8
