"""Unit Disk Graph Medium: frames, airtime, range and collisions."""

import math
from collections import Counter
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Container, Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np

from llnsim.errors import ConfigError
from llnsim.simtime import TICKS_PER_SECOND, SimTime

BROADCAST = 0xFFFF
BITRATE = 250_000

PositionFn = Callable[[int, SimTime], Tuple[float, float]]


class FrameKind(str, Enum):
    DIO = "DIO"
    DAO = "DAO"
    DIS = "DIS"
    RS = "RS"
    RA = "RA"
    NS = "NS"
    NA = "NA"
    DATA = "DATA"
    ACK = "ACK"

    def __str__(self) -> str:
        return self.value


RPL_KINDS = (FrameKind.DIO, FrameKind.DAO, FrameKind.DIS)
ND_KINDS = (FrameKind.RS, FrameKind.RA, FrameKind.NS, FrameKind.NA)
CONTROL_KINDS = RPL_KINDS + ND_KINDS


def airtime(size_bytes: int) -> SimTime:
    """Ticks on air at 250 kbit/s, rounded up."""
    if size_bytes <= 0:
        raise ValueError(f"frame size must be positive, got {size_bytes}")
    return -(-size_bytes * 8 * TICKS_PER_SECOND // BITRATE)


@dataclass(frozen=True)
class FrameSizes:
    """Frame sizes in bytes. ``short`` covers acks, strobes and probes."""

    dio: int = 76
    dao: int = 44
    dis: int = 6
    data: int = 60
    short: int = 12
    nd: int = 40

    def validate(self) -> None:
        for name, value in vars(self).items():
            if value <= 0:
                raise ConfigError(f"radio.frame_sizes.{name} must be > 0, got {value}")

    def size_of(self, kind: FrameKind) -> int:
        if kind in ND_KINDS:
            return self.nd
        return {
            FrameKind.DIO: self.dio,
            FrameKind.DAO: self.dao,
            FrameKind.DIS: self.dis,
            FrameKind.DATA: self.data,
            FrameKind.ACK: self.short,
        }[kind]


@dataclass(frozen=True)
class UdgmConfig:
    tx_range: float = 100.0
    interference_range: float = 100.0
    success_ratio: float = 1.0

    def validate(self) -> None:
        if not 0 < self.tx_range <= self.interference_range:
            raise ConfigError(
                "radio.udgm: need 0 < tx_range <= interference_range, got "
                f"{self.tx_range}, {self.interference_range}"
            )
        if not 0 <= self.success_ratio <= 1:
            raise ConfigError(f"radio.udgm.success_ratio must be in [0, 1], got {self.success_ratio}")


@dataclass
class Frame:
    """One link-layer frame; ``payload`` holds the control message or data packet."""

    src: int
    dst: int
    kind: FrameKind
    size_bytes: int
    payload: Any = None
    aired: bool = field(default=False, repr=False, compare=False)

    @property
    def airtime(self) -> SimTime:
        return airtime(self.size_bytes)

    @property
    def is_broadcast(self) -> bool:
        return self.dst == BROADCAST

    def peer_label(self) -> str:
        return "*" if self.is_broadcast else str(self.dst)


@dataclass(eq=False)
class Transmission:
    """A train of copies of one frame sent by ``src``.

    Copy ``k`` occupies ``[copies[k], copies[k] + copy_len)``. Copies starting
    at or after ``end`` were never sent (the train was cut short by an ack).
    ``continuous`` trains keep the channel busy in the gaps between copies.
    """

    tx_id: int
    src: int
    frame: Frame
    start: SimTime
    end: SimTime
    copy_len: SimTime
    copies: List[SimTime] = field(default_factory=list)
    continuous: bool = False
    done_handle: Any = None

    def sent_copies(self) -> List[SimTime]:
        return self.copies[: bisect_left(self.copies, self.end)]

    def copy_sent(self, k: int) -> bool:
        return 0 <= k < len(self.copies) and self.copies[k] < self.end

    def first_copy_from(self, t: SimTime) -> Optional[int]:
        """Index of the first sent copy starting at or after ``t``."""
        k = bisect_left(self.copies, t)
        return k if self.copy_sent(k) else None

    def overlaps(self, a: SimTime, b: SimTime) -> bool:
        """True if any sent copy overlaps ``[a, b)``."""
        k = bisect_right(self.copies, a - self.copy_len)
        while k < len(self.copies) and self.copies[k] < b and self.copies[k] < self.end:
            if self.copies[k] + self.copy_len > a:
                return True
            k += 1
        return False

    def energy_at(self, t: SimTime) -> bool:
        if not self.start <= t < self.end:
            return False
        return self.continuous or self.overlaps(t, t + 1)

    def tx_intervals(self) -> Iterator[Tuple[SimTime, SimTime]]:
        for s in self.sent_copies():
            yield s, s + self.copy_len


def neighbors_in_range(positions: Sequence[Tuple[float, float]], cfg: UdgmConfig) -> Set[Tuple[int, int]]:
    """Unordered pairs ``(i, j)``, ``i < j``, within ``tx_range`` (inclusive)."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    dist = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
    ii, jj = np.nonzero(np.triu(dist <= cfg.tx_range, k=1))
    return {(int(i), int(j)) for i, j in zip(ii, jj)}


class Medium:
    """Shared channel: in-flight transmissions and the reception rule."""

    # Transmissions ending this long before now can no longer affect a decision.
    PRUNE_MARGIN = 4 * TICKS_PER_SECOND

    def __init__(
        self,
        cfg: UdgmConfig,
        position: PositionFn,
        loss_rng: Optional[Callable[[int], np.random.Generator]] = None,
    ):
        self.cfg = cfg
        self.position = position
        self.loss_rng = loss_rng
        self.transmissions: Dict[int, Transmission] = {}
        self.frames_on_air: Counter = Counter()
        self._next_id = 0
        self._last_prune = 0

    def distance(self, a: int, b: int, t: SimTime) -> float:
        pa = self.position(a, t)
        pb = self.position(b, t)
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def in_range(self, a: int, b: int, t: SimTime) -> bool:
        return self.distance(a, b, t) <= self.cfg.tx_range

    def begin(
        self,
        src: int,
        frame: Frame,
        start: SimTime,
        end: SimTime,
        copy_len: SimTime,
        copies: Iterable[SimTime] = (),
        continuous: bool = False,
    ) -> Transmission:
        self._prune(start)
        tx = Transmission(
            tx_id=self._next_id,
            src=src,
            frame=frame,
            start=start,
            end=end,
            copy_len=copy_len,
            copies=list(copies),
            continuous=continuous,
        )
        self._next_id += 1
        self.transmissions[tx.tx_id] = tx
        if not frame.aired:
            frame.aired = True
            self.frames_on_air[frame.kind] += 1
        return tx

    def get(self, tx_id: int) -> Optional[Transmission]:
        return self.transmissions.get(tx_id)

    def _prune(self, now: SimTime) -> None:
        if now - self._last_prune < self.PRUNE_MARGIN:
            return
        cutoff = now - self.PRUNE_MARGIN
        self.transmissions = {k: tx for k, tx in self.transmissions.items() if tx.end >= cutoff}
        self._last_prune = now

    def channel_busy(self, node: int, t: SimTime) -> bool:
        """Carrier sense: energy from another node within interference range."""
        for tx in self.transmissions.values():
            if tx.src != node and tx.energy_at(t):
                if self.distance(tx.src, node, t) <= self.cfg.interference_range:
                    return True
        return False

    def transmitting(self, node: int, a: SimTime, b: SimTime) -> bool:
        """True if ``node`` itself has a copy on air overlapping ``[a, b)``."""
        return any(tx.src == node and tx.overlaps(a, b) for tx in self.transmissions.values())

    def active_from(self, node: int, t: SimTime) -> bool:
        """True while a transmission started by ``node`` is still in progress."""
        return any(tx.src == node and tx.start <= t < tx.end for tx in self.transmissions.values())

    def interfered(
        self,
        receiver: int,
        a: SimTime,
        b: SimTime,
        exclude: Container[int] = (),
        skip: Optional[Transmission] = None,
    ) -> bool:
        """Another carrier within interference range of ``receiver`` overlaps ``[a, b)``."""
        for other in self.transmissions.values():
            if other is skip or other.src == receiver or other.src in exclude:
                continue
            if other.overlaps(a, b) and self.distance(other.src, receiver, a) <= self.cfg.interference_range:
                return True
        return False

    def collided(self, tx: Transmission, k: int, receiver: int) -> bool:
        a = tx.copies[k]
        return self.interfered(receiver, a, a + tx.copy_len, exclude=(tx.src,), skip=tx)

    def receives(self, tx: Transmission, k: int, receiver: int) -> bool:
        """Reception rule for copy ``k`` of ``tx`` at ``receiver``."""
        if not tx.copy_sent(k):
            return False
        a = tx.copies[k]
        b = a + tx.copy_len
        if not self.in_range(tx.src, receiver, a):
            return False
        if self.transmitting(receiver, a, b):
            return False
        if self.collided(tx, k, receiver):
            return False
        if self.cfg.success_ratio < 1.0 and self.loss_rng is not None:
            return bool(self.loss_rng(receiver).random() < self.cfg.success_ratio)
        return True
