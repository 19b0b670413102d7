"""Random Direction model."""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from llnsim.errors import ConfigError
from llnsim.mobility.base import (
    EDGE_EPS,
    AreaBounds,
    BaseMobilityModel,
    MobilityTrace,
    Position,
    TraceBuilder,
    unit_heading,
)
from llnsim.simtime import SimTime

Normal = Tuple[float, float]


def travel_to_boundary(pos: Position, heading: float, area: AreaBounds) -> Position:
    """First boundary point hit from ``pos`` along ``heading``."""
    x, y = pos
    ux, uy = unit_heading(heading)
    candidates = []
    if ux > EDGE_EPS:
        candidates.append((area.width - x) / ux)
    elif ux < -EDGE_EPS:
        candidates.append(x / -ux)
    if uy > EDGE_EPS:
        candidates.append((area.height - y) / uy)
    elif uy < -EDGE_EPS:
        candidates.append(y / -uy)
    s = min(candidates)
    bx, by = area.clamp((x + ux * s, y + uy * s))
    # Snap the coordinate of the wall actually reached.
    if ux > EDGE_EPS and abs(s - (area.width - x) / ux) <= EDGE_EPS:
        bx = area.width
    elif ux < -EDGE_EPS and abs(s - x / -ux) <= EDGE_EPS:
        bx = 0.0
    if uy > EDGE_EPS and abs(s - (area.height - y) / uy) <= EDGE_EPS:
        by = area.height
    elif uy < -EDGE_EPS and abs(s - y / -uy) <= EDGE_EPS:
        by = 0.0
    return (bx, by)


def inward_normals(pos: Position, area: AreaBounds) -> List[Normal]:
    """Inward normals of every wall ``pos`` rests on (two at a corner)."""
    x, y = pos
    normals: List[Normal] = []
    if x <= EDGE_EPS:
        normals.append((1.0, 0.0))
    elif x >= area.width - EDGE_EPS:
        normals.append((-1.0, 0.0))
    if y <= EDGE_EPS:
        normals.append((0.0, 1.0))
    elif y >= area.height - EDGE_EPS:
        normals.append((0.0, -1.0))
    return normals


def draw_heading(rng: np.random.Generator, normals: List[Normal]) -> float:
    """Heading strictly inside every half-plane given by ``normals``.

    One wall: the normal angle plus an offset in the open interval
    ``(-pi/2, pi/2)``. A corner: rejection sampling over the full circle.
    """
    if not normals:
        return float(rng.uniform(0.0, 2 * math.pi))
    if len(normals) == 1:
        nx, ny = normals[0]
        base = math.atan2(ny, nx)
        while True:
            offset = float(rng.uniform(-math.pi / 2, math.pi / 2))
            if abs(offset) < math.pi / 2:
                return (base + offset) % (2 * math.pi)
    while True:
        angle = float(rng.uniform(0.0, 2 * math.pi))
        ux, uy = unit_heading(angle)
        if all(ux * nx + uy * ny > 0 for nx, ny in normals):
            return angle


@dataclass
class RandomDirection(BaseMobilityModel):
    """Straight runs to the area boundary, a pause there, then a new inward heading."""

    v_min: float = 0.5
    v_max: float = 1.5
    t_pause: float = 10.0

    name = "rdm"

    def validate(self) -> None:
        if not 0 <= self.v_min <= self.v_max:
            raise ConfigError(f"rdm: need 0 <= v_min <= v_max, got {self.v_min}, {self.v_max}")
        if self.t_pause < 0:
            raise ConfigError(f"rdm: t_pause must be >= 0, got {self.t_pause}")

    def generate(
        self,
        area: AreaBounds,
        duration: SimTime,
        rng: np.random.Generator,
        start: Optional[Position] = None,
        node_id: int = 0,
    ) -> MobilityTrace:
        self.validate()
        builder = TraceBuilder(node_id, self._start(area, rng, start))
        if self.v_max == 0:
            builder.hold_until(duration)
            return builder.build()
        heading = draw_heading(rng, inward_normals(builder.position, area))
        while builder.t < duration:
            speed = float(rng.uniform(self.v_min, self.v_max))
            if speed > 0:
                here = builder.position
                dest = travel_to_boundary(here, heading, area)
                builder.move_to(math.hypot(dest[0] - here[0], dest[1] - here[1]) / speed, dest)
            builder.pause(self.t_pause)
            heading = draw_heading(rng, inward_normals(builder.position, area))
        builder.hold_until(duration)
        return builder.build()
