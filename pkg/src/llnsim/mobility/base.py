"""Waypoint traces, interpolation and the mobility model interface."""

import math
from abc import ABC, abstractmethod
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from llnsim.errors import ConfigError
from llnsim.simtime import TICKS_PER_SECOND, SimTime

Position = Tuple[float, float]
Velocity = Tuple[float, float]

# Tolerance for deciding that a coordinate sits on a boundary.
EDGE_EPS = 1e-9


@dataclass(frozen=True)
class AreaBounds:
    """Rectangle ``[0, width] x [0, height]`` in meters."""

    width: float = 200.0
    height: float = 200.0

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise ConfigError(f"area must have positive size, got {self.width}x{self.height}")

    def contains(self, pos: Position, eps: float = 1e-6) -> bool:
        x, y = pos
        return -eps <= x <= self.width + eps and -eps <= y <= self.height + eps

    def uniform_point(self, rng: np.random.Generator) -> Position:
        return (float(rng.uniform(0.0, self.width)), float(rng.uniform(0.0, self.height)))

    def clamp(self, pos: Position) -> Position:
        x, y = pos
        return (min(max(x, 0.0), self.width), min(max(y, 0.0), self.height))


@dataclass(frozen=True)
class Waypoint:
    """Position ``(x, y)`` reached at tick ``t``."""

    t: SimTime
    x: float
    y: float

    @property
    def pos(self) -> Position:
        return (self.x, self.y)


@dataclass
class MobilityTrace:
    """Time-ordered waypoints of one node.

    Consecutive equal positions encode a pause. ``wrap_segments`` lists the
    segments (by index of their first waypoint) that cross the toroidal edge;
    those interpolate along the short path and need ``area``.
    """

    node_id: int
    waypoints: List[Waypoint]
    wrap_segments: FrozenSet[int] = frozenset()
    area: Optional[AreaBounds] = None
    _times: List[SimTime] = field(init=False, repr=False, compare=False)
    _seg_v: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError(f"trace for node {self.node_id} has no waypoints")
        if self.waypoints[0].t != 0:
            raise ValueError(f"trace for node {self.node_id} does not start at t=0")
        self._times = [w.t for w in self.waypoints]
        for i in range(1, len(self._times)):
            if self._times[i] <= self._times[i - 1]:
                raise ValueError(
                    f"trace for node {self.node_id}: waypoint times not strictly "
                    f"increasing at index {i} ({self._times[i - 1]} -> {self._times[i]})"
                )
        if self.wrap_segments and self.area is None:
            raise ValueError("wrap segments require the torus area")
        seg_v = np.zeros((len(self.waypoints), 2))
        for i in range(len(self.waypoints) - 1):
            dx, dy = self._displacement(i)
            dt = (self._times[i + 1] - self._times[i]) / TICKS_PER_SECOND
            seg_v[i] = (dx / dt, dy / dt)
        self._seg_v = seg_v

    @property
    def end_time(self) -> SimTime:
        return self._times[-1]

    @property
    def times(self) -> List[SimTime]:
        return self._times

    def _displacement(self, i: int) -> Tuple[float, float]:
        w0, w1 = self.waypoints[i], self.waypoints[i + 1]
        dx, dy = w1.x - w0.x, w1.y - w0.y
        if i in self.wrap_segments:
            assert self.area is not None
            dx = _short_delta(dx, self.area.width)
            dy = _short_delta(dy, self.area.height)
        return dx, dy

    def segment_index(self, t: float) -> int:
        if t < 0 or t > self._times[-1]:
            raise ValueError(
                f"t={t} outside trace of node {self.node_id} [0, {self._times[-1]}]"
            )
        return bisect_right(self._times, t) - 1

    def is_static(self) -> bool:
        first = self.waypoints[0]
        return all(w.x == first.x and w.y == first.y for w in self.waypoints)


def _short_delta(delta: float, size: float) -> float:
    if delta > size / 2:
        return delta - size
    if delta < -size / 2:
        return delta + size
    return delta


def _wrap_coord(value: float, size: float) -> float:
    wrapped = value % size
    return 0.0 if wrapped >= size else wrapped


def position_at(trace: MobilityTrace, t: float) -> Position:
    """Piecewise-linear position at tick ``t`` (constant during pauses)."""
    i = trace.segment_index(t)
    w0 = trace.waypoints[i]
    if i == len(trace.waypoints) - 1 or t == w0.t:
        return w0.pos
    w1 = trace.waypoints[i + 1]
    f = (t - w0.t) / (w1.t - w0.t)
    dx, dy = trace._displacement(i)
    x, y = w0.x + f * dx, w0.y + f * dy
    if i in trace.wrap_segments:
        assert trace.area is not None
        x = _wrap_coord(x, trace.area.width)
        y = _wrap_coord(y, trace.area.height)
    return (x, y)


def velocity_at(trace: MobilityTrace, t: float) -> Velocity:
    """Segment velocity in m/s; right-continuous at waypoint boundaries."""
    i = trace.segment_index(t)
    vx, vy = trace._seg_v[i]
    return (float(vx), float(vy))


def velocities_at(trace: MobilityTrace, ticks: np.ndarray) -> np.ndarray:
    """Vectorized :func:`velocity_at` over an array of ticks, shape ``(K, 2)``."""
    ticks = np.asarray(ticks, dtype=float)
    if ticks.size and (ticks.min() < 0 or ticks.max() > trace.end_time):
        raise ValueError(f"times outside trace of node {trace.node_id}")
    idx = np.searchsorted(np.asarray(trace.times, dtype=float), ticks, side="right") - 1
    return trace._seg_v[idx]


def seconds_to_ticks_fast(seconds: float) -> SimTime:
    """Half-up tick rounding for kinematic durations (float input)."""
    return int(math.floor(seconds * TICKS_PER_SECOND + 0.5))


class TraceBuilder:
    """Accumulates waypoints on an integer tick clock."""

    def __init__(self, node_id: int, start: Position):
        self.node_id = node_id
        self.t: SimTime = 0
        self.points: List[Waypoint] = [Waypoint(0, float(start[0]), float(start[1]))]
        self.wraps: set = set()

    @property
    def position(self) -> Position:
        return self.points[-1].pos

    def move_to(self, seconds: float, pos: Position, wrap: bool = False) -> None:
        """Travel to ``pos`` over ``seconds``.

        A move shorter than half a tick folds into the last segment by moving
        its end point. Right after the start there is no segment to fold into,
        so the move lasts one tick instead.
        """
        if seconds < 0:
            raise ValueError(f"negative move duration {seconds} for node {self.node_id}")
        target = (float(pos[0]), float(pos[1]))
        dt = seconds_to_ticks_fast(seconds)
        if dt <= 0:
            if target == self.position and not wrap:
                return
            if len(self.points) > 1:
                last = self.points[-1]
                self.points[-1] = Waypoint(last.t, *target)
                if wrap:
                    self.wraps.add(len(self.points) - 2)
                return
            dt = 1
        self.t += dt
        self.points.append(Waypoint(self.t, float(pos[0]), float(pos[1])))
        if wrap:
            self.wraps.add(len(self.points) - 2)

    def pause(self, seconds: float) -> None:
        if seconds > 0:
            self.move_to(seconds, self.position)

    def hold_until(self, t_end: SimTime) -> None:
        """Stay put until ``t_end`` (no-op if already there)."""
        if self.t < t_end:
            x, y = self.position
            self.t = t_end
            self.points.append(Waypoint(t_end, x, y))

    def build(self, area: Optional[AreaBounds] = None) -> MobilityTrace:
        return MobilityTrace(
            node_id=self.node_id,
            waypoints=list(self.points),
            wrap_segments=frozenset(self.wraps),
            area=area if self.wraps else None,
        )


def reflect_path(
    start: Position,
    heading: Tuple[float, float],
    distance: float,
    area: AreaBounds,
) -> Tuple[List[Tuple[float, Position]], Tuple[float, float]]:
    """Follow a unit heading for ``distance`` meters with specular reflection.

    Returns the breakpoints as ``(distance travelled, position)`` pairs (wall
    contacts plus the end point) and the final heading.
    """
    x, y = start
    ux, uy = heading
    remaining = distance
    travelled = 0.0
    points: List[Tuple[float, Position]] = []
    for _ in range(100_000):
        tx = math.inf
        if ux > 0:
            tx = (area.width - x) / ux
        elif ux < 0:
            tx = x / -ux
        ty = math.inf
        if uy > 0:
            ty = (area.height - y) / uy
        elif uy < 0:
            ty = y / -uy
        t_hit = min(tx, ty)
        if t_hit >= remaining:
            x, y = area.clamp((x + ux * remaining, y + uy * remaining))
            travelled += remaining
            points.append((travelled, (x, y)))
            break
        x, y = area.clamp((x + ux * t_hit, y + uy * t_hit))
        travelled += t_hit
        remaining -= t_hit
        if tx <= t_hit:
            ux = -ux
            x = 0.0 if ux > 0 else area.width
        if ty <= t_hit:
            uy = -uy
            y = 0.0 if uy > 0 else area.height
        if t_hit > 0:
            points.append((travelled, (x, y)))
    return points, (ux, uy)


class BaseMobilityModel(ABC):
    """Abstract base class for entity mobility models.

    Subclasses are dataclasses whose fields are the model parameters.
    """

    name: str = ""

    def validate(self) -> None:
        """Raise ConfigError on invalid parameters. Override when needed."""

    @abstractmethod
    def generate(
        self,
        area: AreaBounds,
        duration: SimTime,
        rng: np.random.Generator,
        start: Optional[Position] = None,
        node_id: int = 0,
    ) -> MobilityTrace:
        """Generate a trace covering ``[0, duration]``."""

    def _start(self, area: AreaBounds, rng: np.random.Generator, start: Optional[Position]) -> Position:
        return area.uniform_point(rng) if start is None else area.clamp(start)


def trace_stays_in_bounds(trace: MobilityTrace, area: AreaBounds) -> bool:
    """Waypoints in bounds imply every interpolated point is (convex area)."""
    return all(area.contains(w.pos) for w in trace.waypoints)


def static_trace(node_id: int, pos: Position, duration: SimTime) -> MobilityTrace:
    """Two-waypoint trace of a node that never moves."""
    builder = TraceBuilder(node_id, pos)
    builder.hold_until(max(duration, 1))
    return builder.build()


def unit_heading(angle: float) -> Tuple[float, float]:
    return (math.cos(angle), math.sin(angle))


def check_probability_matrix(matrix: Sequence[Sequence[float]], what: str) -> None:
    if len(matrix) != 3 or any(len(row) != 3 for row in matrix):
        raise ConfigError(f"{what} must be a 3x3 matrix")
    for i, row in enumerate(matrix):
        if any(p < 0 for p in row):
            raise ConfigError(f"{what} row {i} has a negative entry")
        if abs(sum(row) - 1.0) > 1e-9:
            raise ConfigError(f"{what} row {i} sums to {sum(row)}, expected 1")
