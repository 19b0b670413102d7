"""Boundless Simulation Area model (toroidal)."""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

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


def wrap_position(x: float, y: float, area: AreaBounds) -> Tuple[Position, bool]:
    """Map a point onto the torus; the flag tells whether it crossed an edge."""
    wx, wy = x % area.width, y % area.height
    if wx >= area.width:
        wx = 0.0
    if wy >= area.height:
        wy = 0.0
    crossed = not (0.0 <= x < area.width and 0.0 <= y < area.height)
    return (wx, wy), crossed


@dataclass
class BoundlessArea(BaseMobilityModel):
    """Speed and heading drift by bounded uniform increments; edges wrap."""

    v_max: float = 1.5
    delta_v_max: float = 0.2
    delta_theta_max: float = math.pi / 8
    update_interval: float = 1.0

    name = "bsa"

    def validate(self) -> None:
        if self.v_max < 0:
            raise ConfigError(f"bsa: v_max must be >= 0, got {self.v_max}")
        if self.delta_v_max < 0 or self.delta_theta_max < 0:
            raise ConfigError("bsa: delta_v_max and delta_theta_max must be >= 0")
        if self.update_interval <= 0:
            raise ConfigError(f"bsa: update_interval must be > 0, got {self.update_interval}")

    def check_area(self, area: AreaBounds) -> None:
        # Short-path interpolation needs every step under half the torus.
        if self.v_max * self.update_interval >= min(area.width, area.height) / 2:
            raise ConfigError("bsa: v_max * update_interval must be below half the area size")

    def step(self, speed: float, heading: float, rng: np.random.Generator) -> Tuple[float, float]:
        """Next ``(speed, heading)``; speed is clamped to ``[0, v_max]``."""
        dv = float(rng.uniform(-self.delta_v_max, self.delta_v_max))
        dtheta = float(rng.uniform(-self.delta_theta_max, self.delta_theta_max))
        new_speed = min(max(speed + dv, 0.0), self.v_max)
        return new_speed, (heading + dtheta) % (2 * math.pi)

    def generate(
        self,
        area: AreaBounds,
        duration: SimTime,
        rng: np.random.Generator,
        start: Optional[Position] = None,
        node_id: int = 0,
    ) -> MobilityTrace:
        self.validate()
        self.check_area(area)
        start_pos, _ = wrap_position(*self._start(area, rng, start), area)
        builder = TraceBuilder(node_id, start_pos)
        speed = float(rng.uniform(0.0, self.v_max))
        heading = float(rng.uniform(0.0, 2 * math.pi))
        while builder.t < duration:
            x, y = builder.position
            dist = speed * self.update_interval
            pos, crossed = wrap_position(
                x + dist * math.cos(heading), y + dist * math.sin(heading), area
            )
            builder.move_to(self.update_interval, pos, wrap=crossed)
            speed, heading = self.step(speed, heading, rng)
        builder.hold_until(duration)
        return builder.build(area)
