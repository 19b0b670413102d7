"""Simulated time: integer ticks at 32768 ticks per second."""

import math
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Union

TICKS_PER_SECOND = 32768

# Ticks since the start of the run. Never decreases.
SimTime = int


def seconds_to_ticks(seconds: Union[int, float, str, Decimal, Fraction]) -> SimTime:
    """Convert seconds to ticks, rounding half-up.

    Floats go through their shortest decimal repr so that ``0.0004`` means
    exactly 0.4 ms rather than its binary approximation.
    """
    if isinstance(seconds, Fraction):
        exact = seconds * TICKS_PER_SECOND
        return math.floor(exact + Fraction(1, 2))
    if isinstance(seconds, float):
        seconds = repr(float(seconds))
    value = Decimal(seconds) * TICKS_PER_SECOND
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def ticks_to_seconds(ticks: SimTime) -> Fraction:
    """Exact seconds represented by a tick count."""
    return Fraction(ticks, TICKS_PER_SECOND)


def ticks_to_float(ticks: float) -> float:
    """Seconds as a float, for kinematics and display."""
    return ticks / TICKS_PER_SECOND
