from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conetrace.errors import CutoffIntegralObstruction, NonzeroIntegral, ResidueObstruction
from conetrace.homog import HomogeneousFunction, sphere_area
from conetrace.poly import Poly
from conetrace.randgen import random_homogeneous
from conetrace.suites import schwartz_closed_form
from conetrace.symbols import (CHI, ClassicalSymbol, PolyGaussian, classical_decompose,
                               cutoff_integral, divergence_mp, schwartz_decompose,
                               schwartz_decompose_zero_integral)

seeds = st.integers(0, 2**32 - 1)


def _chi_oracle(r):
    # smooth step written out directly: phi(t) = exp(-1/t)
    t = 4 * r - 1
    if t <= 0:
        return mpmath.mpf(0)
    if t >= 1:
        return mpmath.mpf(1)
    p, q = mpmath.exp(-1 / t), mpmath.exp(-1 / (1 - t))
    return p / (p + q)


def _cutoff_oracle(b, n):
    """finite part of int_{|xi|<R} chi |xi|^b by splitting at r = 1."""
    e = mpmath.mpf(b.numerator) / b.denominator + n - 1
    A = sphere_area(n)
    inner = mpmath.quad(lambda r: _chi_oracle(r) * r**e, [0.25, 0.375, 0.5, 1])
    if b == -n:
        return A * inner
    return A * (inner - 1 / (e + 1))


def test_chi_profile():
    r = np.linspace(0, 1, 41)
    vals = CHI.radial_np(r)
    assert np.all(vals[r <= 0.25] == 0) and np.all(vals[r >= 0.5] == 1)
    assert np.all(np.diff(vals) >= 0)
    ref = np.array([float(_chi_oracle(mpmath.mpf(x))) for x in r])
    assert np.max(np.abs(vals - ref)) < 1e-14


@pytest.mark.parametrize("n,b", [(2, Fraction(-3, 2)), (2, Fraction(-2)), (2, Fraction(1)),
                                 (3, Fraction(-3)), (3, Fraction(-7, 2)), (2, Fraction(-5, 2))])
def test_cutoff_integral_matches_quadrature(n, b):
    sig = ClassicalSymbol.from_homogeneous(HomogeneousFunction.radial(n, b))
    with mpmath.workdps(30):
        val, logc = cutoff_integral(sig)
        assert abs(val - _cutoff_oracle(b, n)) < 1e-20
        if b == -n:
            assert abs(logc.value() - sphere_area(n)) < 1e-25
        else:
            assert logc.is_zero()


def test_gaussian_integral():
    g = PolyGaussian.gaussian(2)
    assert abs(complex(g.integral().value()) - np.pi) < 1e-14
    g3 = PolyGaussian(3, Poly.var(3, 0) * Poly.var(3, 0))
    assert abs(complex(g3.integral().value()) - np.pi ** 1.5 / 2) < 1e-13


def test_schwartz_closed_form():
    e1, e2 = schwartz_closed_form(20, seed=3)
    assert e1 <= 1e-12 and e2 <= 1e-10


@given(seeds)
def test_schwartz_divergence_random_polynomial(seed):
    rng = np.random.default_rng(seed)
    x0, x1 = Poly.var(2, 0), Poly.var(2, 1)
    P = Poly.const(2, int(rng.integers(1, 4))) + x0 * x1 * int(rng.integers(-3, 4)) \
        + x0 * x0 * int(rng.integers(-2, 3))
    f = PolyGaussian(2, P)
    sig = schwartz_decompose(f)
    with mpmath.workdps(30):
        for _ in range(4):
            xi = rng.normal(size=2) * 1.3
            assert abs(divergence_mp(sig, xi) - f.eval_mp(xi)) < 1e-12


def test_zero_integral_primitives():
    x0 = Poly.var(2, 0)
    f = PolyGaussian(2, x0 * x0 * 2 - Poly.const(2, 1))   # (2 xi1^2 - 1) e^{-|xi|^2}
    assert f.integral().is_zero()
    sig = schwartz_decompose_zero_integral(f)
    assert sig[0].partial(0) + sig[1].partial(1) == f
    with pytest.raises(NonzeroIntegral):
        schwartz_decompose_zero_integral(PolyGaussian.gaussian(2))


@settings(max_examples=6)
@given(seeds, st.sampled_from([Fraction(-1), Fraction(-3), Fraction(0)]))
def test_classical_decompose_integer_order(seed, a):
    rng = np.random.default_rng(seed)
    n = 2
    comps = [random_homogeneous(rng, n, a - j) for j in range(3)]
    j0 = int(a + n)
    if 0 <= j0 < 3:
        c = comps[j0]
        comps[j0] = c - HomogeneousFunction.radial(n, -n, c.constant_harmonic_coefficient())
    sig = ClassicalSymbol(n, a, comps)
    parts = classical_decompose(sig)
    with mpmath.workdps(30):
        for _ in range(3):
            xi = rng.normal(size=2) * 2
            assert abs(divergence_mp(parts, xi) - sig.value_mp(xi)) < 1e-10


def test_classical_decompose_obstructions():
    n = 2
    with pytest.raises(ResidueObstruction):
        classical_decompose(ClassicalSymbol.from_homogeneous(HomogeneousFunction.radial(n, -2)))
    with pytest.raises(CutoffIntegralObstruction):
        classical_decompose(ClassicalSymbol.from_homogeneous(
            HomogeneousFunction.radial(n, Fraction(-3, 2))))
