from fractions import Fraction

import mpmath
import numpy as np
import pytest

from conetrace.commrep import commutator_representation
from conetrace.errors import InvalidInput, Unsupported
from conetrace.homog import HomogeneousFunction
from conetrace.psido import TorusPsiDO, residue_trace
from conetrace.suites import forward_commutator_operator


def test_forward_commutator_reconstructed():
    A = forward_commutator_operator(np.random.default_rng(1))
    assert residue_trace(A).is_zero()
    rep = commutator_representation(A, Fraction(1, 2), J=2, tol=1e-4)
    assert max(rep.level_errors.values()) <= 1e-4
    assert len(rep.P) == len(rep.Q) == 6


def test_residue_coefficient_of_q0():
    B = TorusPsiDO.from_symbol(HomogeneousFunction.radial(2, -2), 1)
    rep = commutator_representation(B, Fraction(1, 2), J=2)
    with mpmath.workdps(30):
        assert abs(rep.res_coeff.value() - 2 * mpmath.pi) < 1e-20
    # what is left after removing Res(B) Q0 is smoothing
    assert max(rep.level_errors.values()) == 0.0


def test_guards():
    B = TorusPsiDO.from_symbol(HomogeneousFunction.radial(2, -2), 1)
    with pytest.raises(Unsupported):
        commutator_representation(B, 0)
    with pytest.raises(InvalidInput):
        commutator_representation(B, Fraction(1, 2), J=5)
    with pytest.raises(Unsupported):
        commutator_representation(TorusPsiDO.from_symbol(HomogeneousFunction.radial(3, -3)),
                                  Fraction(1, 2))
