"""Working precision for extended-precision evaluation.

The number of significant decimal digits defaults to 30 and can be raised
with the ``CONETRACE_PRECISION`` environment variable. Internal
computations carry a few guard digits on top.
"""
import os
from contextlib import contextmanager

import mpmath

DEFAULT_DIGITS = 30
GUARD_DIGITS = 10


def output_digits() -> int:
    raw = os.environ.get("CONETRACE_PRECISION")
    if raw:
        try:
            v = int(raw)
        except ValueError:
            return DEFAULT_DIGITS
        return max(15, v)
    return DEFAULT_DIGITS


def working_dps() -> int:
    return output_digits() + GUARD_DIGITS


@contextmanager
def working():
    """Raise mpmath precision to the working level (never lowers it)."""
    dps = max(working_dps(), mpmath.mp.dps)
    with mpmath.workdps(dps):
        yield dps


def mpf_of(q):
    """Fraction -> mpf at current precision."""
    return mpmath.mpf(q.numerator) / q.denominator
