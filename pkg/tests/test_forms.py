from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from conetrace.errors import NotClosed, ZeroHomogeneity
from conetrace.forms import (HomogeneousForm, LogHomogeneousForm, contract_liouville,
                             euler_primitive, primitive_of_top_form, sphere_integral,
                             split_degree_zero)
from conetrace.homog import HomogeneousFunction, residue
from conetrace.randgen import random_closed_form, random_form, random_homogeneous

seeds = st.integers(0, 2**32 - 1)
NONZERO = [Fraction(-1, 2), Fraction(1), Fraction(-2), Fraction(3, 2), Fraction(-3)]


@given(seeds, st.sampled_from([2, 3]), st.sampled_from(NONZERO + [Fraction(0)]))
def test_dd_is_zero(seed, n, a):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(0, n - 1))
    assert random_form(rng, n, p, a).d().d().is_zero()


@given(seeds, st.sampled_from([2, 3]), st.sampled_from(NONZERO))
def test_form_euler_and_primitive(seed, n, a):
    rng = np.random.default_rng(seed)
    w = random_closed_form(rng, n, int(rng.integers(1, n + 1)), a)
    assert contract_liouville(w).d() == w.scale(a)
    assert euler_primitive(w).d() == w


@given(seeds, st.sampled_from([2, 3]))
def test_wedge_graded_commutative(seed, n):
    rng = np.random.default_rng(seed)
    a = random_form(rng, n, 1, Fraction(1))
    b = random_form(rng, n, 1, Fraction(-1, 2))
    assert a.wedge(b) == -b.wedge(a)
    assert a.wedge(b).d() == a.d().wedge(b) - a.wedge(b.d())


def test_euler_primitive_rejects():
    n = 2
    w = HomogeneousForm.dxi(n, 0).times_function(HomogeneousFunction.coordinate(n, 1))
    with pytest.raises(NotClosed):
        euler_primitive(w)
    with pytest.raises(ZeroHomogeneity):
        euler_primitive(HomogeneousForm.r_inv_dr(n))


@pytest.mark.parametrize("n", [2, 3])
def test_sphere_integral_of_volume_contraction(n):
    beta = contract_liouville(HomogeneousForm.volume(n))
    with mpmath.workdps(30):
        from conetrace.homog import sphere_area
        assert abs(sphere_integral(beta).value() - sphere_area(n)) < 1e-25


@given(seeds, st.sampled_from([2, 3]))
def test_degree_zero_split(seed, n):
    rng = np.random.default_rng(seed)
    w = random_form(rng, n, 1, Fraction(0))
    T, E = split_degree_zero(w)
    assert HomogeneousForm.r_inv_dr(n).wedge(T) + E == w
    assert contract_liouville(E).is_zero()


@given(seeds, st.sampled_from([2, 3]))
def test_primitive_of_top_form(seed, n):
    rng = np.random.default_rng(seed)
    f = random_homogeneous(rng, n, Fraction(-n - 1))
    beta = primitive_of_top_form(f)
    assert beta.d() == HomogeneousForm.volume(n).times_function(f)


def test_top_form_residue_pairs_with_sphere_integral():
    # the residue of f at -n equals the sphere integral of i_X(f dxi)
    f = HomogeneousFunction.radial(3, -3, 5)
    beta = contract_liouville(HomogeneousForm.volume(3).times_function(f))
    assert sphere_integral(beta) == residue(f)


def test_log_form_euler_primitive():
    n = 2
    rng = np.random.default_rng(11)
    w = random_closed_form(rng, n, 2, Fraction(-1, 2))
    L = LogHomogeneousForm.from_form(w, depth=1)
    assert euler_primitive(L).d() == L
