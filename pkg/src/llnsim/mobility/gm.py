"""Gauss-Markov model."""

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

# Fraction of min(width, height) treated as the edge buffer zone.
BUFFER_FRACTION = 0.1


@dataclass
class GaussMarkov(BaseMobilityModel):
    """Speed and direction follow AR(1) processes tuned by ``alpha``.

    ``alpha = 1`` repeats the previous values forever; ``alpha = 0`` draws
    them independently around the means every update.
    """

    alpha: float = 0.75
    mean_speed: float = 1.0
    mean_direction: float = 0.0
    sigma_speed: float = 0.2
    sigma_direction: float = 0.4
    update_interval: float = 1.0

    name = "gm"

    def validate(self) -> None:
        if not 0 <= self.alpha <= 1:
            raise ConfigError(f"gm: alpha must be in [0, 1], got {self.alpha}")
        if self.mean_speed < 0:
            raise ConfigError(f"gm: mean_speed must be >= 0, got {self.mean_speed}")
        if self.sigma_speed < 0 or self.sigma_direction < 0:
            raise ConfigError("gm: sigmas must be >= 0")
        if self.update_interval <= 0:
            raise ConfigError(f"gm: update_interval must be > 0, got {self.update_interval}")

    def step(
        self,
        speed: float,
        direction: float,
        rng: np.random.Generator,
        mean_direction: Optional[float] = None,
    ) -> Tuple[float, float]:
        """One AR(1) update of ``(speed, direction)``."""
        a = self.alpha
        noise = math.sqrt(1.0 - a * a)
        target = self.mean_direction if mean_direction is None else mean_direction
        g_s = float(rng.normal(0.0, self.sigma_speed)) if self.sigma_speed > 0 else 0.0
        g_d = float(rng.normal(0.0, self.sigma_direction)) if self.sigma_direction > 0 else 0.0
        new_speed = a * speed + (1 - a) * self.mean_speed + noise * g_s
        new_direction = a * direction + (1 - a) * target + noise * g_d
        return new_speed, new_direction

    def steering_direction(self, pos: Position, area: AreaBounds) -> Optional[float]:
        """Direction toward the center when inside the edge buffer, else None."""
        x, y = pos
        buffer = BUFFER_FRACTION * min(area.width, area.height)
        if min(x, y, area.width - x, area.height - y) >= buffer:
            return None
        toward = math.atan2(area.height / 2 - y, area.width / 2 - x)
        return toward

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
        speed, direction = self.mean_speed, self.mean_direction
        while builder.t < duration:
            moving = max(speed, 0.0)
            if moving > 0:
                points, _ = reflect_path(
                    builder.position, unit_heading(direction),
                    moving * self.update_interval, area,
                )
                travelled = 0.0
                for dist, pos in points:
                    builder.move_to((dist - travelled) / moving, pos)
                    travelled = dist
            else:
                builder.pause(self.update_interval)
            steer = self.steering_direction(builder.position, area)
            if steer is not None:
                # Unwrap so the AR(1) mean is the nearest equivalent angle.
                steer = direction + math.remainder(steer - direction, 2 * math.pi)
            speed, direction = self.step(speed, direction, rng, steer)
        builder.hold_until(duration)
        return builder.build()
