"""CSMA MAC with a bounded FIFO queue and link-layer retransmissions."""

from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Deque, Optional

import numpy as np

from llnsim.errors import ConfigError
from llnsim.events import EventKind, TimerTag
from llnsim.radio.base import MacOutcome
from llnsim.radio.medium import Frame
from llnsim.simtime import SimTime

if TYPE_CHECKING:
    from llnsim.world import WorldState


@dataclass(frozen=True)
class MacConfig:
    """CSMA settings.

    ``max_backoffs`` busy-channel backoffs are allowed per round; exhausting
    them ends the round like a missing ack. A frame gets ``max_attempts``
    rounds. Backoff windows are ``wake_interval * 2**n`` with ``n`` capped at
    ``max_backoff_exponent``.
    """

    queue_capacity: int = 16
    max_backoffs: int = 3
    max_attempts: int = 8
    max_backoff_exponent: int = 4

    def validate(self) -> None:
        if self.queue_capacity < 1:
            raise ConfigError("radio.mac.queue_capacity must be >= 1")
        if self.max_backoffs < 0:
            raise ConfigError("radio.mac.max_backoffs must be >= 0")
        if self.max_attempts < 1:
            raise ConfigError("radio.mac.max_attempts must be >= 1")
        if self.max_backoff_exponent < 0:
            raise ConfigError("radio.mac.max_backoff_exponent must be >= 0")


@dataclass
class QueuedFrame:
    frame: Frame
    attempts: int = 0
    backoffs: int = 0
    deferrals: int = 0
    on_air: bool = False

    @property
    def rounds(self) -> int:
        """Finished rounds: aired attempts plus rounds lost to a busy channel."""
        return self.attempts + self.deferrals


class Mac:
    """Per-node MAC. Sends one frame at a time through the RDC layer."""

    def __init__(self, node_id: int, cfg: MacConfig, backoff_window: SimTime, rng: np.random.Generator):
        self.node_id = node_id
        self.cfg = cfg
        self.backoff_window = backoff_window
        self.rng = rng
        self.queue: Deque[QueuedFrame] = deque()
        self.current: Optional[QueuedFrame] = None
        self.dropped_full = 0

    def __len__(self) -> int:
        return len(self.queue) + (1 if self.current else 0)

    def enqueue(self, world: "WorldState", frame: Frame) -> bool:
        """Queue a frame; False when the queue is full."""
        if len(self.queue) >= self.cfg.queue_capacity:
            self.dropped_full += 1
            return False
        self.queue.append(QueuedFrame(frame))
        self._next(world)
        return True

    def _next(self, world: "WorldState") -> None:
        if self.current is None and self.queue:
            self.current = self.queue.popleft()
            world.kernel.schedule_at(world.kernel.now, self.node_id, EventKind.TIMER_EXPIRY, TimerTag.MAC_ATTEMPT)

    def backoff(self, exponent: int) -> SimTime:
        """Uniform draw from ``[1, backoff_window * 2**exponent]``."""
        window = self.backoff_window << min(max(exponent, 0), self.cfg.max_backoff_exponent)
        return int(self.rng.integers(1, window + 1))

    def _retry(self, world: "WorldState", delay: SimTime, now: SimTime) -> None:
        world.kernel.schedule_at(now + delay, self.node_id, EventKind.TIMER_EXPIRY, TimerTag.MAC_ATTEMPT)

    def _next_round(self, world: "WorldState", now: SimTime) -> None:
        """Back off and start another round, or give the frame up."""
        qf = self.current
        assert qf is not None
        if qf.rounds >= self.cfg.max_attempts:
            self._finish(world, success=False)
            return
        qf.backoffs = 0
        self._retry(world, self.backoff(qf.rounds - 1), now)

    def on_attempt(self, world: "WorldState", now: SimTime) -> None:
        qf = self.current
        if qf is None:
            return
        if world.nodes[self.node_id].rx_until > now or world.medium.channel_busy(self.node_id, now):
            qf.backoffs += 1
            if qf.backoffs > self.cfg.max_backoffs:
                qf.deferrals += 1
                self._next_round(world, now)
                return
            self._retry(world, self.backoff(qf.backoffs - 1), now)
            return
        qf.attempts += 1
        if not qf.on_air:
            qf.on_air = True
            world.on_first_air(self.node_id, qf.frame)
        world.rdc.start(world, self.node_id, qf.frame, now)

    def on_done(self, world: "WorldState", outcome: MacOutcome, now: SimTime) -> None:
        qf = self.current
        if qf is None:
            return
        if outcome in (MacOutcome.SENT, MacOutcome.ACK):
            self._finish(world, success=True)
        elif outcome is MacOutcome.NOACK:
            self._next_round(world, now)
        else:
            self._finish(world, success=False)

    def _finish(self, world: "WorldState", success: bool) -> None:
        qf = self.current
        assert qf is not None
        self.current = None
        world.on_tx_result(self.node_id, qf.frame, success, qf.attempts)
        self._next(world)
