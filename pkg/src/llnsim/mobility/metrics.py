"""Relative speed and the pair-averaged mobility metric."""

import math
from typing import Sequence

import numpy as np

from llnsim.mobility.base import MobilityTrace, velocities_at, velocity_at
from llnsim.simtime import TICKS_PER_SECOND, SimTime


def relative_speed(trace_i: MobilityTrace, trace_j: MobilityTrace, t: float) -> float:
    """Norm of the velocity difference of two nodes at tick ``t`` (m/s)."""
    vi = velocity_at(trace_i, t)
    vj = velocity_at(trace_j, t)
    return math.hypot(vi[0] - vj[0], vi[1] - vj[1])


def mobility_metric(
    traces: Sequence[MobilityTrace],
    horizon: SimTime,
    dt: SimTime = TICKS_PER_SECOND,
) -> float:
    """Time average of relative speed over ``[0, horizon]``, averaged over pairs.

    The integral uses the midpoint rule with step ``dt`` ticks (the last step
    is shortened to end at ``horizon``).
    """
    n = len(traces)
    if n < 2:
        raise ValueError(f"mobility metric needs at least 2 traces, got {n}")
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    starts = np.arange(0, horizon, dt, dtype=float)
    ends = np.minimum(starts + dt, horizon)
    widths = ends - starts
    mids = (starts + ends) / 2
    velocities = np.stack([velocities_at(tr, mids) for tr in traces])
    total = 0.0
    for i in range(n - 1):
        diff = velocities[i + 1:] - velocities[i]
        speeds = np.hypot(diff[..., 0], diff[..., 1])
        total += float((speeds * widths).sum())
    pairs = n * (n - 1) / 2
    return total / horizon / pairs
