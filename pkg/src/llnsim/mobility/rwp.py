"""Random Waypoint model."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from llnsim.errors import ConfigError
from llnsim.mobility.base import (
    AreaBounds,
    BaseMobilityModel,
    MobilityTrace,
    Position,
    TraceBuilder,
)
from llnsim.simtime import SimTime


@dataclass
class RandomWaypoint(BaseMobilityModel):
    """Travel to a uniformly drawn destination, pause, repeat.

    Leg speeds are uniform on ``[v_min, v_max]``.
    """

    v_min: float = 0.5
    v_max: float = 1.5
    t_pause: float = 10.0

    name = "rwp"

    def validate(self) -> None:
        if not 0 <= self.v_min <= self.v_max:
            raise ConfigError(f"rwp: need 0 <= v_min <= v_max, got {self.v_min}, {self.v_max}")
        if self.t_pause < 0:
            raise ConfigError(f"rwp: t_pause must be >= 0, got {self.t_pause}")

    def draw_speed(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.v_min, self.v_max))

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
        while builder.t < duration:
            dest = area.uniform_point(rng)
            speed = self.draw_speed(rng)
            if speed <= 0:
                builder.pause(self.t_pause)
                continue
            x, y = builder.position
            builder.move_to(math.hypot(dest[0] - x, dest[1] - y) / speed, dest)
            builder.pause(self.t_pause)
        builder.hold_until(duration)
        return builder.build()
