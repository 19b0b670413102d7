"""Probabilistic Random Walk model."""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from llnsim.errors import ConfigError
from llnsim.mobility.base import (
    AreaBounds,
    BaseMobilityModel,
    MobilityTrace,
    Position,
    TraceBuilder,
    check_probability_matrix,
    seconds_to_ticks_fast,
)
from llnsim.simtime import SimTime

STAY, BACKWARD, FORWARD = 0, 1, 2

# Past and next positions only connect through the present one.
DEFAULT_MATRIX = [
    [0.0, 0.5, 0.5],
    [0.3, 0.7, 0.0],
    [0.3, 0.0, 0.7],
]


def _reflect(value: float, size: float) -> float:
    if value < 0:
        return min(-value, size)
    if value > size:
        return max(2 * size - value, 0.0)
    return value


@dataclass
class ProbabilisticRandomWalk(BaseMobilityModel):
    """Independent three-state Markov chains on each axis.

    State 0 stays, 1 steps backward and 2 steps forward by ``step_length``
    every ``step_interval`` seconds. Both chains start in state 0.
    """

    matrix: List[List[float]] = field(default_factory=lambda: [row[:] for row in DEFAULT_MATRIX])
    matrix_y: Optional[List[List[float]]] = None
    step_length: float = 1.0
    step_interval: float = 1.0

    name = "prw"

    def validate(self) -> None:
        check_probability_matrix(self.matrix, "prw: matrix")
        if self.matrix_y is not None:
            check_probability_matrix(self.matrix_y, "prw: matrix_y")
        if self.step_length < 0:
            raise ConfigError(f"prw: step_length must be >= 0, got {self.step_length}")
        if self.step_interval <= 0:
            raise ConfigError(f"prw: step_interval must be > 0, got {self.step_interval}")

    def next_state(self, state: int, rng: np.random.Generator, axis: int = 0) -> int:
        matrix = self.matrix if axis == 0 or self.matrix_y is None else self.matrix_y
        row = matrix[state]
        u = float(rng.random())
        if u < row[0]:
            return STAY
        if u < row[0] + row[1]:
            return BACKWARD
        return FORWARD

    def _offset(self, state: int) -> float:
        if state == BACKWARD:
            return -self.step_length
        if state == FORWARD:
            return self.step_length
        return 0.0

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
        sx = sy = STAY
        idle = 0.0
        while builder.t < duration:
            sx = self.next_state(sx, rng, 0)
            sy = self.next_state(sy, rng, 1)
            x, y = builder.position
            nx = _reflect(x + self._offset(sx), area.width)
            ny = _reflect(y + self._offset(sy), area.height)
            if (nx, ny) == (x, y):
                idle += self.step_interval
                if builder.t + seconds_to_ticks_fast(idle) >= duration:
                    break
                continue
            builder.pause(idle)
            idle = 0.0
            builder.move_to(self.step_interval, (nx, ny))
        builder.hold_until(duration)
        return builder.build()
