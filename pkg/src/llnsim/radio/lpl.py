"""Low-power listening: receivers sample the channel, senders strobe."""

import math
from typing import TYPE_CHECKING, Iterator

from llnsim.events import EventKind
from llnsim.radio.activity import Interval, RadioState
from llnsim.radio.base import BaseRdc, MacOutcome
from llnsim.radio.medium import Frame, Transmission
from llnsim.simtime import SimTime

if TYPE_CHECKING:
    from llnsim.world import WorldState


class LplRdc(BaseRdc):
    """ContikiMAC-style strobing.

    A sender repeats the frame back to back, separated by the strobe gap, for
    one wake interval. Every neighbour in range wakes at its next channel
    sample that overlaps the train, stays on and decodes the next full copy.
    The addressee of a unicast acks that copy, which ends the train early.
    """

    name = "lpl"

    def copies_for(self, frame: Frame) -> int:
        period = frame.airtime + self.gap_ticks
        return max(1, math.ceil(self.wake_interval / period))

    def sample_overlapping(self, phase: SimTime, t: SimTime) -> SimTime:
        """Start of the first wake sample that is still on at ``t``."""
        w = self.wake_interval
        k = (t - phase - self.sample_ticks) // w + 1
        return phase + k * w

    def start(self, world: "WorldState", node: int, frame: Frame, now: SimTime) -> Transmission:
        air = frame.airtime
        period = air + self.gap_ticks
        copies = [now + k * period for k in range(self.copies_for(frame))]
        end = copies[-1] + air
        tx = world.medium.begin(node, frame, now, end, air, copies, continuous=True)
        world.activity(node).add_train(tx)
        self.finish(world, tx, end, MacOutcome.SENT if frame.is_broadcast else MacOutcome.NOACK)
        for r in world.candidates(node, now):
            detect = max(self.sample_overlapping(world.nodes[r].phase, now), now)
            if detect < end:
                world.kernel.schedule_at(detect, r, EventKind.WAKE_SAMPLE, "", (tx.tx_id,))
        return tx

    def on_wake_sample(self, world: "WorldState", node: int, tx_id: int, now: SimTime) -> None:
        tx = world.medium.get(tx_id)
        if tx is None or tx.end <= now:
            return
        state = world.nodes[node]
        if state.rx_until > now or world.medium.active_from(node, now):
            return
        k = tx.first_copy_from(now)
        if k is None:
            return
        arrival = tx.copies[k] + tx.copy_len
        state.rx_until = arrival
        world.activity(node).add_listen(now, arrival)
        world.kernel.schedule_at(arrival, node, EventKind.FRAME_ARRIVAL, "", (tx_id, k))

    def implicit_intervals(self, world: "WorldState", node: int, elapsed: SimTime) -> Iterator[Interval]:
        # Start one interval early so a sample straddling t=0 is counted.
        for s in self.periodic_starts(world.nodes[node].phase, elapsed, first_k=-1):
            yield (s, s + self.sample_ticks, RadioState.LISTEN)
