"""Low-power transmit: receivers probe, senders answer the probe."""

from bisect import bisect_right
from typing import TYPE_CHECKING, Iterator, List, Tuple

from llnsim.events import EventKind, TimerTag
from llnsim.radio.activity import Interval, RadioState
from llnsim.radio.base import BaseRdc, MacOutcome
from llnsim.radio.medium import Frame, Transmission
from llnsim.simtime import SimTime

if TYPE_CHECKING:
    from llnsim.world import WorldState


class LptRdc(BaseRdc):
    """Probe-based duty cycling.

    Every node sends a short probe once per wake interval and listens for a
    wake-sample duration afterwards. A unicast sender listens until the
    target's next probe and transmits right after it; a broadcast sender
    answers each neighbour's probe within one wake interval. Probes are not
    stored as explicit activity and never interfere with receptions.
    """

    name = "lpt"

    def probe_heard(self, world: "WorldState", sender: int, target: int, probe: SimTime) -> bool:
        """The target probed at ``probe`` and the sender decoded it."""
        end = probe + self.short_air
        medium = world.medium
        if not medium.in_range(target, sender, probe):
            return False
        if medium.transmitting(target, probe, end):
            return False
        return not medium.interfered(sender, probe, end, exclude=(target,))

    def start(self, world: "WorldState", node: int, frame: Frame, now: SimTime) -> Transmission:
        air = frame.airtime
        if frame.is_broadcast:
            return self._start_broadcast(world, node, frame, now)
        probe = self.next_periodic(world.nodes[frame.dst].phase, now)
        end = probe + self.short_air + air + self.short_air
        tx = world.medium.begin(node, frame, now, end, air)
        world.activity(node).add_train(tx)
        world.kernel.schedule_at(
            probe + self.short_air, node, EventKind.TIMER_EXPIRY, TimerTag.PROBE_WAIT,
            (tx.tx_id, frame.dst, probe),
        )
        return tx

    def _start_broadcast(self, world: "WorldState", node: int, frame: Frame, now: SimTime) -> Transmission:
        air = frame.airtime
        plan: List[Tuple[SimTime, int]] = sorted(
            (self.next_periodic(world.nodes[r].phase, now), r) for r in world.candidates(node, now)
        )
        last_end = now
        slots = []
        for probe, r in plan:
            slot = max(probe + self.short_air, last_end)
            slots.append((probe, r, slot))
            last_end = slot + air
        end = max(now + self.wake_interval, last_end)
        tx = world.medium.begin(node, frame, now, end, air)
        world.activity(node).add_train(tx)
        for probe, r, slot in slots:
            world.kernel.schedule_at(
                probe + self.short_air, node, EventKind.TIMER_EXPIRY, TimerTag.PROBE_WAIT,
                (tx.tx_id, r, probe, slot),
            )
        self.finish(world, tx, end, MacOutcome.SENT)
        return tx

    def on_probe_wait(self, world: "WorldState", node: int, args: tuple, now: SimTime) -> None:
        tx = world.medium.get(args[0])
        if tx is None:
            return
        if tx.frame.is_broadcast:
            self._answer_broadcast_probe(world, tx, args[1], args[2], args[3])
        else:
            self._answer_unicast_probe(world, tx, args[1], args[2], now)

    def _answer_unicast_probe(
        self, world: "WorldState", tx: Transmission, target: int, probe: SimTime, now: SimTime
    ) -> None:
        air = tx.copy_len
        if self.probe_heard(world, tx.src, target, probe):
            tx.copies.append(now)
            arrival = now + air
            tx.end = arrival + self.short_air
            world.activity(target).add_listen(now, arrival)
            world.kernel.schedule_at(
                arrival, target, EventKind.FRAME_ARRIVAL, "", (tx.tx_id, len(tx.copies) - 1)
            )
            self.finish(world, tx, tx.end, MacOutcome.NOACK)
            return
        next_probe = probe + self.wake_interval
        deadline = tx.start + self.cfg.probe_timeout_intervals * self.wake_interval
        if next_probe + self.short_air > deadline:
            tx.end = now
            self.finish(world, tx, now, MacOutcome.DROP)
            return
        tx.end = next_probe + self.short_air + air + self.short_air
        world.kernel.schedule_at(
            next_probe + self.short_air, tx.src, EventKind.TIMER_EXPIRY, TimerTag.PROBE_WAIT,
            (tx.tx_id, target, next_probe),
        )

    def _answer_broadcast_probe(
        self, world: "WorldState", tx: Transmission, target: int, probe: SimTime, slot: SimTime
    ) -> None:
        if not self.probe_heard(world, tx.src, target, probe):
            return
        tx.copies.append(slot)
        arrival = slot + tx.copy_len
        # The target only stays on for one sample after its probe.
        if slot <= probe + self.short_air + self.sample_ticks:
            world.activity(target).add_listen(probe + self.short_air, arrival)
            world.kernel.schedule_at(
                arrival, target, EventKind.FRAME_ARRIVAL, "", (tx.tx_id, len(tx.copies) - 1)
            )

    def implicit_intervals(self, world: "WorldState", node: int, elapsed: SimTime) -> Iterator[Interval]:
        busy = world.activity(node).tx_intervals()
        starts = [s for s, _ in busy]
        for probe in self.periodic_starts(world.nodes[node].phase, elapsed):
            end = probe + self.short_air
            i = bisect_right(starts, end - 1) - 1
            # Intervals are disjoint and sorted, so only the last one starting
            # before the probe ends can overlap it.
            if i >= 0 and busy[i][1] > probe:
                continue
            yield (probe, end, RadioState.TRANSMIT)
            yield (end, end + self.sample_ticks, RadioState.LISTEN)
