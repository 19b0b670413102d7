"""Trickle timer state machine (scheduling is done by the caller)."""

from typing import Tuple

import numpy as np

from llnsim.simtime import SimTime


class TrickleTimer:
    """Interval doubling with redundancy suppression.

    ``begin_interval`` returns the absolute fire point and interval end the
    caller should schedule. ``fire`` says whether to transmit.
    """

    def __init__(self, i_min: SimTime, doublings: int, k: int, rng: np.random.Generator):
        if i_min <= 0 or doublings < 0 or k < 1:
            raise ValueError(f"bad trickle parameters i_min={i_min} doublings={doublings} k={k}")
        self.i_min = i_min
        self.doublings = doublings
        self.k = k
        self.rng = rng
        self.interval: SimTime = i_min
        self.interval_start: SimTime = 0
        self.fire_point: SimTime = 0
        self.counter = 0
        self.running = False

    @property
    def i_max(self) -> SimTime:
        return self.i_min << self.doublings

    def begin_interval(self, now: SimTime) -> Tuple[SimTime, SimTime]:
        """Start an interval of the current length at ``now``."""
        self.interval_start = now
        self.counter = 0
        low = -(-self.interval // 2)
        offset = int(self.rng.integers(low, self.interval)) if self.interval > 1 else 0
        self.fire_point = now + offset
        self.running = True
        return self.fire_point, now + self.interval

    def start(self, now: SimTime) -> Tuple[SimTime, SimTime]:
        self.interval = self.i_min
        return self.begin_interval(now)

    def reset(self, now: SimTime) -> Tuple[SimTime, SimTime]:
        """Inconsistency: back to ``i_min``."""
        return self.start(now)

    def hear_consistent(self) -> None:
        self.counter += 1

    def fire(self) -> bool:
        return self.counter < self.k

    def expire(self, now: SimTime) -> Tuple[SimTime, SimTime]:
        """Interval end: double (capped) and start the next interval."""
        self.interval = min(self.interval * 2, self.i_max)
        return self.begin_interval(now)

    def stop(self) -> None:
        self.running = False
