from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from conetrace.errors import InvalidInput, ResidueObstruction
from conetrace.homog import (HomogeneousFunction, LogHomogeneousFunction, decompose_derivatives,
                             divergence, log_decompose_derivatives, log_divergence, log_residue,
                             residue, sphere_area)
from conetrace.poly import Poly, harmonic_decompose, recombine
from conetrace.randgen import random_homogeneous, random_log_homogeneous, random_poly
from conetrace.suites import euler_identity

seeds = st.integers(0, 2**32 - 1)
DEGREES = [Fraction(-2), Fraction(-3), Fraction(-1), Fraction(-3, 2), Fraction(1, 2), Fraction(2)]


@given(seeds, st.sampled_from([2, 3]), st.sampled_from(DEGREES))
def test_euler_identity(seed, n, a):
    f = random_homogeneous(np.random.default_rng(seed), n, a)
    assert euler_identity(f)


@given(seeds, st.sampled_from([2, 3]), st.integers(0, 6))
def test_harmonic_decomposition_recombines(seed, n, d):
    P = random_poly(np.random.default_rng(seed), n, d, terms=4)
    parts = harmonic_decompose(P, d)
    assert recombine(parts) == P
    for H in parts:
        assert H.laplacian().is_zero()


@given(seeds, st.sampled_from([2, 3]))
def test_residue_of_derivative_vanishes(seed, n):
    rng = np.random.default_rng(seed)
    f = random_homogeneous(rng, n, -n + 1)
    for j in range(n):
        assert residue(f.partial(j)).is_zero()


@given(seeds, st.sampled_from([2, 3]), st.sampled_from(DEGREES))
def test_residue_linear_and_degree_selective(seed, n, a):
    rng = np.random.default_rng(seed)
    f, g = random_homogeneous(rng, n, -n), random_homogeneous(rng, n, -n)
    assert residue(f + g.scale(3)) == residue(f) + residue(g).scale(3)
    if a != -n:
        assert residue(random_homogeneous(rng, n, a)).is_zero()


@given(seeds, st.sampled_from([2, 3]), st.sampled_from(["-n", "-n+1", "-n-1", "-3/2"]))
def test_decompose_round_trip(seed, n, which):
    a = {"-n": Fraction(-n), "-n+1": Fraction(-n + 1), "-n-1": Fraction(-n - 1),
         "-3/2": Fraction(-3, 2)}[which]
    f = random_homogeneous(np.random.default_rng(seed), n, a, kmax=4)
    if a == -n:
        f = f - HomogeneousFunction.radial(n, -n, f.constant_harmonic_coefficient())
    sig = decompose_derivatives(f)
    assert all(s.degree == a + 1 for s in sig)
    assert divergence(sig) == f


@pytest.mark.parametrize("n", [2, 3])
def test_obstruction_exactly_at_residue(n):
    f = HomogeneousFunction.radial(n, -n)
    with pytest.raises(ResidueObstruction):
        decompose_derivatives(f)
    # harmonic terms of positive degree never obstruct
    g = HomogeneousFunction.from_poly(Poly.var(n, 0) * Poly.var(n, 1), -n - 2)
    assert divergence(decompose_derivatives(g)) == g


def test_radial_residues_match_sphere_areas():
    with mpmath.workdps(40):
        assert abs(residue(HomogeneousFunction.radial(2, -2)).value() - 2 * mpmath.pi) < 1e-30
        assert abs(residue(HomogeneousFunction.radial(3, -3)).value() - 4 * mpmath.pi) < 1e-30
        assert abs(sphere_area(4) - 2 * mpmath.pi ** 2) < 1e-30


@given(seeds, st.sampled_from([2, 3]), st.integers(1, 2))
def test_log_decompose_round_trip(seed, n, depth):
    rng = np.random.default_rng(seed)
    F = random_log_homogeneous(rng, n, -n, depth=depth)
    parts = list(F.parts)
    parts[-1] = parts[-1] - HomogeneousFunction.radial(n, -n,
                                                       parts[-1].constant_harmonic_coefficient())
    F = LogHomogeneousFunction(parts)
    assert log_residue(F).is_zero()
    sig = log_decompose_derivatives(F)
    assert log_divergence(sig).with_depth(depth) == F


def test_log_obstruction():
    n = 2
    F = LogHomogeneousFunction.single(HomogeneousFunction.radial(n, -n), 1)
    with pytest.raises(ResidueObstruction):
        log_decompose_derivatives(F)


def test_json_round_trip():
    f = random_homogeneous(np.random.default_rng(3), 3, Fraction(-5, 2))
    assert HomogeneousFunction.from_json(f.to_json()) == f
    with pytest.raises(InvalidInput):
        HomogeneousFunction.from_json({"degree": "1"})
