"""Radio duty-cycling interface shared by the LPL, LPT and always-on modes."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterator, Optional

from llnsim.errors import ConfigError
from llnsim.events import EventKind, TimerTag
from llnsim.radio.activity import Interval
from llnsim.radio.medium import Frame, FrameKind, FrameSizes, Transmission, airtime
from llnsim.simtime import TICKS_PER_SECOND, SimTime, seconds_to_ticks

if TYPE_CHECKING:
    from llnsim.world import WorldState


class MacOutcome(str, Enum):
    """How a transmission attempt ended, as reported to the MAC."""

    SENT = "sent"
    ACK = "ack"
    NOACK = "noack"
    DROP = "drop"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RdcConfig:
    mode: str = "lpl"
    channel_check_rate: float = 8.0
    wake_sample_duration: float = 0.004
    strobe_gap: float = 0.0004
    probe_timeout_intervals: int = 3

    @property
    def wake_interval(self) -> SimTime:
        return seconds_to_ticks(1 / self.channel_check_rate)

    @property
    def sample_ticks(self) -> SimTime:
        return seconds_to_ticks(self.wake_sample_duration)

    @property
    def gap_ticks(self) -> SimTime:
        return seconds_to_ticks(self.strobe_gap)

    def validate(self) -> None:
        if self.channel_check_rate <= 0 or self.channel_check_rate > TICKS_PER_SECOND:
            raise ConfigError(f"radio.rdc.channel_check_rate out of range: {self.channel_check_rate}")
        if not 0 < self.sample_ticks < self.wake_interval:
            raise ConfigError("radio.rdc: need 0 < wake_sample_duration < wake interval")
        if self.gap_ticks < 0:
            raise ConfigError("radio.rdc.strobe_gap must be >= 0")
        if self.probe_timeout_intervals < 1:
            raise ConfigError("radio.rdc.probe_timeout_intervals must be >= 1")


class BaseRdc(ABC):
    """Abstract base class for radio duty-cycling layers.

    An RDC turns one MAC attempt into on-air copies, decides who is awake to
    hear them and reports the outcome through a ``mac-done`` timer.
    """

    name: str = ""

    def __init__(self, cfg: RdcConfig, sizes: FrameSizes):
        self.cfg = cfg
        self.sizes = sizes
        self.wake_interval = cfg.wake_interval
        self.sample_ticks = cfg.sample_ticks
        self.gap_ticks = cfg.gap_ticks
        self.short_air = airtime(sizes.short)

    @abstractmethod
    def start(self, world: "WorldState", node: int, frame: Frame, now: SimTime) -> Transmission:
        """Put ``frame`` on air for one MAC attempt."""

    @abstractmethod
    def implicit_intervals(self, world: "WorldState", node: int, elapsed: SimTime) -> Iterator[Interval]:
        """Periodic radio activity not recorded as explicit intervals."""

    def on_wake_sample(self, world: "WorldState", node: int, tx_id: int, now: SimTime) -> None:
        """Handle a scheduled wake sample. Only LPL schedules them."""

    def on_probe_wait(self, world: "WorldState", node: int, args: tuple, now: SimTime) -> None:
        """Handle the end of a neighbour probe. Only LPT schedules them."""

    def finish(
        self,
        world: "WorldState",
        tx: Transmission,
        at: SimTime,
        outcome: MacOutcome,
    ) -> None:
        tx.done_handle = world.kernel.schedule_at(
            at, tx.src, EventKind.TIMER_EXPIRY, TimerTag.MAC_DONE, (tx.tx_id, outcome.value)
        )

    def on_arrival(self, world: "WorldState", receiver: int, tx_id: int, k: int, now: SimTime) -> None:
        """Copy ``k`` of a transmission ended at ``receiver``."""
        tx = world.medium.get(tx_id)
        if tx is None or not world.medium.receives(tx, k, receiver):
            return
        frame = tx.frame
        if frame.is_broadcast:
            world.receive(receiver, frame)
        elif frame.dst == receiver:
            self.acknowledge(world, tx, receiver, now)
            world.receive(receiver, frame)

    def acknowledge(self, world: "WorldState", tx: Transmission, receiver: int, now: SimTime) -> None:
        """Send the link-layer ack and stop the sender's train.

        If the sender already gave up (its no-ack timer fired) nothing is sent.
        """
        if not world.kernel.cancel(tx.done_handle):
            return
        end = now + self.short_air
        ack = Frame(receiver, tx.src, FrameKind.ACK, self.sizes.short)
        world.medium.begin(receiver, ack, now, end, self.short_air, [now])
        world.activity(receiver).add_tx(now, end)
        world.activity(tx.src).add_listen(now, end)
        tx.end = min(tx.end, now)
        self.finish(world, tx, end, MacOutcome.ACK)

    def next_periodic(self, phase: SimTime, t: SimTime) -> SimTime:
        """First instant ``phase + k * wake_interval`` at or after ``t``."""
        w = self.wake_interval
        k = -(-(t - phase) // w)
        return phase + k * w

    def periodic_starts(self, phase: SimTime, elapsed: SimTime, first_k: int = 0) -> Iterator[SimTime]:
        start = phase + first_k * self.wake_interval
        while start < elapsed:
            yield start
            start += self.wake_interval

    def describe(self) -> Optional[str]:
        return f"{self.name} @ {self.cfg.channel_check_rate:g} Hz"
