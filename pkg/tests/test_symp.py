from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conetrace.errors import DegreeMismatch, RankDeficient, ResidueObstruction
from conetrace.homog import HomogeneousFunction
from conetrace.psido import random_cone_function
from conetrace.suites import (brute_force_symplectic_residue, forward_bracket,
                              hamiltonian_homomorphism, jacobi, leibniz, wod_identity)
from conetrace.symp import (ConeFunction, CosphereGrid, GridFunction, _on_grid,
                            bracket_decompose, bracket_decompose_grid, check_spanning,
                            poisson_bracket, spanning_set, symplectic_residue)

seeds = st.integers(0, 2**32 - 1)
DEGS = [Fraction(-1), Fraction(0), Fraction(1, 2), Fraction(-2), Fraction(1)]


def _triple(seed, n):
    rng = np.random.default_rng(seed)
    return [random_cone_function(rng, n, DEGS[int(rng.integers(len(DEGS)))], modes=1)
            for _ in range(3)]


@given(seeds, st.sampled_from([2, 3]))
def test_poisson_algebra(seed, n):
    f, g, h = _triple(seed, n)
    assert poisson_bracket(f, g) == -poisson_bracket(g, f)
    assert poisson_bracket(f, g).degree == f.degree + g.degree - 1
    assert jacobi(f, g, h)
    assert leibniz(f, g, h)


@settings(max_examples=10)
@given(seeds, st.sampled_from([2, 3]))
def test_top_form_identity_and_hamiltonian_fields(seed, n):
    f, g, _ = _triple(seed, n)
    assert wod_identity(f, g)
    assert hamiltonian_homomorphism(f, g)


def test_canonical_brackets():
    n = 2
    xi0 = ConeFunction.fiber(HomogeneousFunction.coordinate(n, 0))
    e = ConeFunction.exp(n, (1, 0))
    # {xi_1, e^{i x_1}} = i e^{i x_1}
    assert poisson_bracket(xi0, e) == e.scale(1j)


def test_residue_16pi3_and_quadrature():
    f = ConeFunction.fiber(HomogeneousFunction.radial(2, -2))
    with mpmath.workdps(30):
        assert abs(symplectic_residue(f).value() - 16 * mpmath.pi ** 3) < 1e-20
    assert abs(brute_force_symplectic_residue(f) - float(16 * mpmath.pi ** 3)) < 1e-8


def test_residue_ignores_oscillating_modes():
    f = ConeFunction.cos(2, 1, HomogeneousFunction.radial(2, -2))
    assert symplectic_residue(f).is_zero()
    assert abs(brute_force_symplectic_residue(f)) < 1e-9


@settings(max_examples=15)
@given(seeds)
def test_residue_of_bracket_vanishes(seed):
    rng = np.random.default_rng(seed)
    l = DEGS[int(rng.integers(len(DEGS)))]
    a, b = random_cone_function(rng, 2, l), random_cone_function(rng, 2, -1 - l)
    assert abs(complex(symplectic_residue(poisson_bracket(a, b)).value())) < 1e-10


@pytest.mark.parametrize("l", [Fraction(1), Fraction(-1, 2)])
def test_spanning_set_rank(l):
    grid = CosphereGrid(8, 16)
    assert check_spanning(spanning_set(2, l), grid) > 1e-3
    assert check_spanning(spanning_set(2, 0), grid, tangential=True) > 1e-3
    with pytest.raises(RankDeficient):
        check_spanning(spanning_set(2, 0), grid)


@pytest.mark.parametrize("l,m", [(Fraction(1), Fraction(1)), (Fraction(0), Fraction(0)),
                                 (Fraction(1), Fraction(-2))])
def test_bracket_decompose_forward(l, m):
    rng = np.random.default_rng(5)
    f = forward_bracket(rng, l, m)
    pairs, err = bracket_decompose(f, l, m, "16x32", tol=1e-6)
    assert err <= 1e-6 and len(pairs) == 6


def test_bracket_decompose_rejections():
    f = ConeFunction.fiber(HomogeneousFunction.radial(2, -2))
    with pytest.raises(ResidueObstruction):
        bracket_decompose(f, 1, -2, "8x16")
    with pytest.raises(DegreeMismatch):
        bracket_decompose(f, 1, 1, "8x16")


def test_bracket_decompose_grid_input():
    rng = np.random.default_rng(2)
    f = forward_bracket(rng, Fraction(1), Fraction(1))
    grid = CosphereGrid(16, 32)
    F = GridFunction(grid, _on_grid(f, grid), f.degree)
    _, err = bracket_decompose_grid(F, 1, tol=1e-6)
    assert err <= 1e-6


def test_json_round_trip():
    f = random_cone_function(np.random.default_rng(4), 2, Fraction(-1, 2), modes=2)
    assert ConeFunction.from_json(f.to_json()) == f
