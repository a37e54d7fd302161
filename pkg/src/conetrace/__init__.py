"""Exact symbol calculus, residues and trace functionals on cones and tori."""
from .errors import (ConetraceError, CutoffIntegralObstruction, DegreeMismatch, InvalidInput,
                     NonzeroIntegral, NotClosed, NotIdempotent, Obstruction, OrderOutOfSupportedRange,
                     OrderTooHigh, RankDeficient, ReductionViolation, ResidueLeak,
                     ResidueObstruction, ToleranceNotMet, Unsupported, UnsupportedOrder,
                     ZeroHomogeneity)
from .gaussian import GaussRational, PiSum
from .homog import HomogeneousFunction, LogHomogeneousFunction, ResidueValue
from .poly import Poly

__version__ = "0.1.0"

__all__ = [
    "ConetraceError", "CutoffIntegralObstruction", "DegreeMismatch", "InvalidInput",
    "NonzeroIntegral", "NotClosed", "NotIdempotent", "Obstruction", "OrderOutOfSupportedRange",
    "OrderTooHigh", "RankDeficient", "ReductionViolation", "ResidueLeak", "ResidueObstruction",
    "ToleranceNotMet", "Unsupported", "UnsupportedOrder", "ZeroHomogeneity", "GaussRational",
    "PiSum", "HomogeneousFunction", "LogHomogeneousFunction", "ResidueValue", "Poly",
]
