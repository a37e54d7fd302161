"""Exception hierarchy.

``Obstruction`` subclasses signal that a mathematical precondition failed
(the CLI maps them to exit code 2); everything else is a usage error.
"""


class ConetraceError(Exception):
    pass


class InvalidInput(ConetraceError, ValueError):
    pass


class DegreeMismatch(ConetraceError, ValueError):
    pass


class Unsupported(ConetraceError):
    pass


class Obstruction(ConetraceError):
    """A mathematical obstruction; ``condition`` names what was violated."""

    condition = "obstruction"

    def __init__(self, message, condition=None):
        super().__init__(message)
        if condition is not None:
            self.condition = condition


class ResidueObstruction(Obstruction):
    condition = "residue must vanish: res(f) = 0 is necessary and sufficient for f = sum_j d_j sigma_j"


class CutoffIntegralObstruction(Obstruction):
    condition = "cut-off integral must vanish at non-integer order"


class NonzeroIntegral(Obstruction):
    condition = "integral of f over R^n must vanish for Schwartz primitives"


class NotClosed(Obstruction):
    condition = "form must be closed (d omega = 0)"


class ZeroHomogeneity(Obstruction):
    condition = "homogeneity must be nonzero for the Euler primitive"


class RankDeficient(Obstruction):
    condition = "differentials of the spanning set must span the cotangent space"


class ToleranceNotMet(Obstruction):
    condition = "requested tolerance was not reached"

    def __init__(self, message, achieved=None, condition=None):
        super().__init__(message, condition)
        self.achieved = achieved


class ResidueLeak(Obstruction):
    condition = "intermediate symplectic residue must vanish"


class OrderTooHigh(Obstruction):
    condition = "L2 trace requires order < -n"


class OrderOutOfSupportedRange(Obstruction):
    condition = "regularized trace is served for order < -n+1 outside the integers >= -n"


class UnsupportedOrder(Obstruction):
    condition = "order outside the supported dispatch table"


class ReductionViolation(Obstruction):
    condition = "matrix functional must satisfy T(A x E_ij) = delta_ij T(A x E_11)"


class NotIdempotent(Obstruction):
    condition = "e(x)^2 = e(x) must hold exactly"
