"""Random exact instances for property checks and the verify suites."""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from .forms import HomogeneousForm
from .gaussian import GaussRational, to_fraction
from .homog import HomogeneousFunction, LogHomogeneousFunction
from .poly import Poly, monomials
from .psido import random_cone_function, random_operator


def small_rational(rng, num=4, den=3) -> Fraction:
    return Fraction(int(rng.integers(-num, num + 1)), int(rng.integers(1, den + 1)))


def small_gauss(rng, complex_prob=0.3) -> GaussRational:
    im = small_rational(rng) if rng.random() < complex_prob else 0
    return GaussRational(small_rational(rng), im)


def random_poly(rng, n, d, terms=3) -> Poly:
    """Random homogeneous polynomial of degree d with a few monomials."""
    monos = list(monomials(n, d))
    out = {}
    for _ in range(terms):
        e = monos[int(rng.integers(len(monos)))]
        out[e] = out.get(e, GaussRational(0)) + small_gauss(rng)
    return Poly(n, out)


def random_homogeneous(rng, n, degree, kmax=4, terms=3) -> HomogeneousFunction:
    """sum of P_d |xi|^(degree - d) over a few random degrees d <= kmax."""
    degree = to_fraction(degree)
    polys = []
    for _ in range(terms):
        d = int(rng.integers(0, kmax + 1))
        polys.append(random_poly(rng, n, d, terms=2))
    return HomogeneousFunction.from_raw(n, degree, polys)


def random_log_homogeneous(rng, n, degree, depth=1, kmax=3) -> LogHomogeneousFunction:
    fs = [random_homogeneous(rng, n, degree, kmax) for _ in range(depth + 1)]
    return LogHomogeneousFunction(fs)


def random_form(rng, n, p, homogeneity, density=0.6, kmax=3) -> HomogeneousForm:
    homogeneity = to_fraction(homogeneity)
    coeffs = {}
    for I in combinations(range(n), p):
        if rng.random() < density or not coeffs:
            coeffs[I] = random_homogeneous(rng, n, homogeneity - p, kmax, terms=2)
    return HomogeneousForm(n, p, homogeneity, coeffs)


def random_closed_form(rng, n, p, homogeneity) -> HomogeneousForm:
    """d of a random (p-1)-form: closed (and exact) of the given homogeneity."""
    if p == 0:
        return HomogeneousForm.function(HomogeneousFunction.zero(n, homogeneity))
    return random_form(rng, n, p - 1, homogeneity).d()


def random_degree(rng, n, choices=None) -> Fraction:
    choices = choices or [Fraction(-n), Fraction(-n + 1), Fraction(-n - 1), Fraction(-3, 2),
                          Fraction(1, 2), Fraction(1), Fraction(-1, 3)]
    return choices[int(rng.integers(len(choices)))]


__all__ = ["small_rational", "small_gauss", "random_poly", "random_homogeneous",
           "random_log_homogeneous", "random_form", "random_closed_form", "random_degree",
           "random_cone_function", "random_operator"]
