"""Event kinds dispatched by the kernel.

Payloads are closed tagged unions: a kind, a short string tag and a tuple of
arguments. Nothing callable travels through the queue, so the dispatch log is a
plain function of the event sequence.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Tuple

from llnsim.simtime import SimTime

# Target id used for events addressed to the world rather than a node.
WORLD = -1


class EventKind(str, Enum):
    """Top-level event kinds."""

    TIMER_EXPIRY = "timer-expiry"
    FRAME_ARRIVAL = "frame-arrival"
    WAYPOINT_UPDATE = "waypoint-update"
    APP_SEND = "app-send"
    WAKE_SAMPLE = "wake-sample"

    def __str__(self) -> str:
        return self.value


class TimerTag(str, Enum):
    """Tags carried by ``timer-expiry`` events."""

    SINK_INIT = "sink-init"
    ND_START = "nd-start"
    RS_RETRY = "rs-retry"
    TRICKLE_FIRE = "trickle-fire"
    TRICKLE_END = "trickle-end"
    DAO = "dao"
    DIS = "dis"
    MAC_ATTEMPT = "mac-attempt"
    MAC_DONE = "mac-done"
    PROBE_WAIT = "probe-wait"

    def __str__(self) -> str:
        return self.value


@dataclass(eq=False)
class Event:
    """A scheduled occurrence. ``(fire_time, seq)`` is its unique order key."""

    fire_time: SimTime
    target: int
    kind: EventKind
    tag: str = ""
    args: Tuple[Any, ...] = ()
    seq: int = -1
    cancelled: bool = field(default=False, repr=False)

    @property
    def label(self) -> str:
        """Kind column of the dispatch log."""
        return f"{self.kind.value}:{self.tag}" if self.tag else self.kind.value

    def target_label(self) -> str:
        return "world" if self.target == WORLD else str(self.target)

    def log_line(self) -> str:
        return f"{self.fire_time}\t{self.seq}\t{self.target_label()}\t{self.label}"
