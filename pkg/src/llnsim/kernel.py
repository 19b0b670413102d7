"""Deterministic discrete-event kernel."""

import heapq
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from llnsim.errors import SchedulingError, SimulationAborted
from llnsim.events import Event, EventKind
from llnsim.simtime import SimTime

Handler = Callable[[Event], None]


@dataclass(frozen=True)
class EventHandle:
    """Opaque reference to a scheduled event, usable for cancellation."""

    seq: int


@dataclass
class KernelStats:
    """Outcome of a ``run_until`` call."""

    events_dispatched: int
    wall_seconds: float
    end_time: SimTime


class EventQueue:
    """Priority queue ordered by ``(fire_time, seq)``.

    Cancellation is lazy: the entry stays in the heap and is skipped on pop.
    """

    def __init__(self, now: SimTime = 0):
        self.now: SimTime = now
        self._heap: List[Tuple[SimTime, int, Event]] = []
        self._pending: Dict[int, Event] = {}
        self._next_seq = 0

    def __len__(self) -> int:
        return len(self._pending)

    def schedule(self, event: Event) -> EventHandle:
        """Insert an event. Scheduling before ``now`` is a programming error."""
        if event.fire_time < self.now:
            raise SchedulingError(
                f"event {event.label} for {event.target_label()} scheduled at "
                f"{event.fire_time} < now {self.now}"
            )
        event.seq = self._next_seq
        self._next_seq += 1
        self._pending[event.seq] = event
        heapq.heappush(self._heap, (event.fire_time, event.seq, event))
        return EventHandle(event.seq)

    def cancel(self, handle: Optional[EventHandle]) -> bool:
        """Remove a pending event. False if it already fired or was cancelled."""
        if handle is None:
            return False
        event = self._pending.pop(handle.seq, None)
        if event is None:
            return False
        event.cancelled = True
        return True

    def is_pending(self, handle: Optional[EventHandle]) -> bool:
        return handle is not None and handle.seq in self._pending

    def peek_time(self) -> Optional[SimTime]:
        """Fire time of the earliest live event, dropping cancelled heads."""
        while self._heap and self._heap[0][2].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Event:
        """Remove and return the earliest live event, advancing ``now``."""
        while True:
            fire_time, _, event = heapq.heappop(self._heap)
            if event.cancelled:
                continue
            del self._pending[event.seq]
            self.now = fire_time
            return event


class Kernel:
    """Single-threaded event loop dispatching by event kind."""

    def __init__(
        self,
        handlers: Optional[Mapping[EventKind, Handler]] = None,
        event_log: Optional[List[str]] = None,
    ):
        self.queue = EventQueue()
        self.handlers: Dict[EventKind, Handler] = dict(handlers or {})
        self.event_log = event_log
        self.on_dispatch: Optional[Handler] = None
        self.dispatched = 0

    @property
    def now(self) -> SimTime:
        return self.queue.now

    def schedule(self, event: Event) -> EventHandle:
        return self.queue.schedule(event)

    def schedule_at(
        self,
        fire_time: SimTime,
        target: int,
        kind: EventKind,
        tag: str = "",
        args: tuple = (),
    ) -> EventHandle:
        return self.queue.schedule(Event(fire_time, target, kind, str(tag), args))

    def cancel(self, handle: Optional[EventHandle]) -> bool:
        return self.queue.cancel(handle)

    def run_until(self, t_end: SimTime) -> KernelStats:
        """Dispatch every event with ``fire_time <= t_end`` in order.

        Afterwards ``now == t_end``. A handler error aborts the run with the
        offending event attached.
        """
        if t_end < self.queue.now:
            raise SchedulingError(f"t_end {t_end} < now {self.queue.now}")
        started = time.perf_counter()
        count = 0
        while True:
            head = self.queue.peek_time()
            if head is None or head > t_end:
                break
            event = self.queue.pop()
            if self.event_log is not None:
                self.event_log.append(event.log_line())
            try:
                if self.on_dispatch is not None:
                    self.on_dispatch(event)
                handler = self.handlers.get(event.kind)
                if handler is not None:
                    handler(event)
            except SimulationAborted:
                raise
            except Exception as exc:
                raise SimulationAborted(
                    exc, event.fire_time, event.seq, event.target_label(), event.label
                ) from exc
            count += 1
        self.queue.now = t_end
        self.dispatched += count
        return KernelStats(
            events_dispatched=count,
            wall_seconds=time.perf_counter() - started,
            end_time=t_end,
        )
