"""Random Walk model with fixed-time or fixed-distance legs."""

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
    reflect_path,
    unit_heading,
)
from llnsim.simtime import SimTime

DEFAULT_LEG_TIME = 10.0


@dataclass
class RandomWalk(BaseMobilityModel):
    """Memoryless walk: every leg draws a fresh speed and direction.

    Exactly one of ``leg_time`` (seconds) and ``leg_distance`` (meters) is set;
    with neither given the walk uses fixed-time legs of 10 s. Walls reflect.
    """

    v_min: float = 0.0
    v_max: float = 1.5
    leg_time: Optional[float] = None
    leg_distance: Optional[float] = None

    name = "rw"

    def __post_init__(self) -> None:
        if self.leg_time is None and self.leg_distance is None:
            self.leg_time = DEFAULT_LEG_TIME

    def validate(self) -> None:
        if (self.leg_time is None) == (self.leg_distance is None):
            raise ConfigError("rw: exactly one of leg_time and leg_distance must be set")
        if not 0 <= self.v_min <= self.v_max:
            raise ConfigError(f"rw: need 0 <= v_min <= v_max, got {self.v_min}, {self.v_max}")
        if self.leg_time is not None and self.leg_time <= 0:
            raise ConfigError(f"rw: leg_time must be > 0, got {self.leg_time}")
        if self.leg_distance is not None:
            if self.leg_distance <= 0:
                raise ConfigError(f"rw: leg_distance must be > 0, got {self.leg_distance}")
            if self.v_min <= 0:
                raise ConfigError("rw: fixed-distance legs need v_min > 0")

    def draw_leg(self, rng: np.random.Generator) -> Tuple[float, float]:
        """Return ``(speed, direction)`` for one leg."""
        speed = float(rng.uniform(self.v_min, self.v_max))
        direction = float(rng.uniform(0.0, 2 * math.pi))
        return speed, direction

    def leg_duration(self, speed: float) -> float:
        if self.leg_time is not None:
            return self.leg_time
        assert self.leg_distance is not None
        return self.leg_distance / speed

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
        while builder.t < duration:
            speed, direction = self.draw_leg(rng)
            seconds = self.leg_duration(speed)
            if speed <= 0:
                builder.pause(seconds)
                continue
            points, _ = reflect_path(
                builder.position, unit_heading(direction), speed * seconds, area
            )
            travelled = 0.0
            for dist, pos in points:
                builder.move_to((dist - travelled) / speed, pos)
                travelled = dist
        builder.hold_until(duration)
        return builder.build()
