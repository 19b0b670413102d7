"""Per-node radio activity and its reduction to disjoint state intervals."""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, List, Tuple

from llnsim.radio.medium import Transmission
from llnsim.simtime import SimTime


class RadioState(str, Enum):
    TRANSMIT = "transmit"
    LISTEN = "listen"
    OFF = "off"

    def __str__(self) -> str:
        return self.value


Interval = Tuple[SimTime, SimTime, RadioState]


@dataclass
class RadioTotals:
    tx_ticks: int = 0
    listen_ticks: int = 0
    off_ticks: int = 0


class RadioActivity:
    """Explicit radio activity of one node.

    Trains are stored whole and expanded at the end of the run, after any
    truncation by an ack is known. Periodic wake samples and probes are not
    stored here; the duty-cycling layer supplies them as implicit intervals.
    """

    def __init__(self, node_id: int):
        self.node_id = node_id
        self.intervals: List[Interval] = []
        self.trains: List[Transmission] = []

    def add(self, start: SimTime, end: SimTime, state: RadioState) -> None:
        if end > start:
            self.intervals.append((start, end, state))

    def add_tx(self, start: SimTime, end: SimTime) -> None:
        self.add(start, end, RadioState.TRANSMIT)

    def add_listen(self, start: SimTime, end: SimTime) -> None:
        self.add(start, end, RadioState.LISTEN)

    def add_train(self, tx: Transmission) -> None:
        self.trains.append(tx)

    def explicit_intervals(self) -> List[Interval]:
        """All explicit intervals; a train is on air for copies and listens in the gaps."""
        out = list(self.intervals)
        for tx in self.trains:
            if tx.end > tx.start:
                out.append((tx.start, tx.end, RadioState.LISTEN))
            out.extend((s, e, RadioState.TRANSMIT) for s, e in tx.tx_intervals())
        out.sort()
        return out

    def tx_intervals(self) -> List[Tuple[SimTime, SimTime]]:
        return [(s, e) for s, e, state in self.explicit_intervals() if state is RadioState.TRANSMIT]


def merge_activity(
    explicit: Iterable[Interval],
    implicit: Iterable[Interval],
    elapsed: SimTime,
) -> Iterator[Interval]:
    """Disjoint intervals covering ``[0, elapsed)``.

    Transmit wins over Listen where they overlap; uncovered time is Off.
    Adjacent intervals in the same state are coalesced.
    """
    points: List[Tuple[SimTime, int, int]] = []
    for source in (explicit, implicit):
        for start, end, state in source:
            start, end = max(start, 0), min(end, elapsed)
            if end <= start:
                continue
            if state is RadioState.TRANSMIT:
                points.append((start, 1, 0))
                points.append((end, -1, 0))
            elif state is RadioState.LISTEN:
                points.append((start, 0, 1))
                points.append((end, 0, -1))
    points.sort()
    tx = listen = 0
    prev = 0
    run_start, run_state = 0, RadioState.OFF
    i = 0
    while i <= len(points):
        t = points[i][0] if i < len(points) else elapsed
        if t > prev:
            state = RadioState.TRANSMIT if tx else RadioState.LISTEN if listen else RadioState.OFF
            if state is not run_state:
                if prev > run_start:
                    yield (run_start, prev, run_state)
                run_start, run_state = prev, state
            prev = t
        if i == len(points):
            break
        while i < len(points) and points[i][0] == t:
            tx += points[i][1]
            listen += points[i][2]
            i += 1
    if elapsed > run_start:
        yield (run_start, elapsed, run_state)


def summarize(intervals: Iterable[Interval]) -> RadioTotals:
    totals = RadioTotals()
    for start, end, state in intervals:
        if state is RadioState.TRANSMIT:
            totals.tx_ticks += end - start
        elif state is RadioState.LISTEN:
            totals.listen_ticks += end - start
        else:
            totals.off_ticks += end - start
    return totals
