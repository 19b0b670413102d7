"""City Section model on a regular street grid."""

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


@dataclass
class CitySection(BaseMobilityModel):
    """Manhattan routes between street intersections at the speed limit.

    Each epoch moves horizontally, then vertically, to a uniformly drawn
    intersection and pauses there.
    """

    grid_spacing: float = 50.0
    speed_limit: float = 1.5
    t_pause: float = 10.0

    name = "csm"

    def validate(self) -> None:
        if self.grid_spacing <= 0:
            raise ConfigError(f"csm: grid_spacing must be > 0, got {self.grid_spacing}")
        if self.speed_limit <= 0:
            raise ConfigError(f"csm: speed_limit must be > 0, got {self.speed_limit}")
        if self.t_pause < 0:
            raise ConfigError(f"csm: t_pause must be >= 0, got {self.t_pause}")

    def grid_size(self, area: AreaBounds) -> Tuple[int, int]:
        """Number of blocks along x and y; the spacing must divide the area."""
        nx = area.width / self.grid_spacing
        ny = area.height / self.grid_spacing
        if abs(nx - round(nx)) > 1e-9 or abs(ny - round(ny)) > 1e-9:
            raise ConfigError(
                f"csm: grid_spacing {self.grid_spacing} does not divide "
                f"area {area.width}x{area.height}"
            )
        return int(round(nx)), int(round(ny))

    def snap(self, pos: Position, area: AreaBounds) -> Position:
        """Nearest street intersection to ``pos``."""
        nx, ny = self.grid_size(area)
        i = min(max(int(round(pos[0] / self.grid_spacing)), 0), nx)
        j = min(max(int(round(pos[1] / self.grid_spacing)), 0), ny)
        return (i * self.grid_spacing, j * self.grid_spacing)

    def draw_intersection(self, area: AreaBounds, rng: np.random.Generator) -> Position:
        nx, ny = self.grid_size(area)
        i = int(rng.integers(0, nx + 1))
        j = int(rng.integers(0, ny + 1))
        return (i * self.grid_spacing, j * self.grid_spacing)

    def generate(
        self,
        area: AreaBounds,
        duration: SimTime,
        rng: np.random.Generator,
        start: Optional[Position] = None,
        node_id: int = 0,
    ) -> MobilityTrace:
        self.validate()
        origin = self.draw_intersection(area, rng) if start is None else self.snap(start, area)
        builder = TraceBuilder(node_id, origin)
        stalled = 0
        while builder.t < duration:
            before = builder.t
            x, y = builder.position
            dx, dy = self.draw_intersection(area, rng)
            if dx != x:
                builder.move_to(abs(dx - x) / self.speed_limit, (dx, y))
            if dy != y:
                builder.move_to(abs(dy - y) / self.speed_limit, (dx, dy))
            builder.pause(self.t_pause)
            stalled = stalled + 1 if builder.t == before else 0
            if stalled > 1000:
                break
        builder.hold_until(duration)
        return builder.build()
