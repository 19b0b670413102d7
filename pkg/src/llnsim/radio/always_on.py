"""No duty cycling: the radio listens whenever it is not transmitting."""

from typing import TYPE_CHECKING, Iterator

from llnsim.events import EventKind
from llnsim.radio.activity import Interval, RadioState
from llnsim.radio.base import BaseRdc, MacOutcome
from llnsim.radio.medium import Frame, Transmission
from llnsim.simtime import SimTime

if TYPE_CHECKING:
    from llnsim.world import WorldState


class AlwaysOnRdc(BaseRdc):
    name = "always-on"

    def start(self, world: "WorldState", node: int, frame: Frame, now: SimTime) -> Transmission:
        air = frame.airtime
        arrival = now + air
        tx = world.medium.begin(node, frame, now, arrival, air, [now])
        world.activity(node).add_train(tx)
        if frame.is_broadcast:
            self.finish(world, tx, arrival, MacOutcome.SENT)
        else:
            self.finish(world, tx, arrival + self.short_air, MacOutcome.NOACK)
        for r in world.candidates(node, now):
            world.kernel.schedule_at(arrival, r, EventKind.FRAME_ARRIVAL, "", (tx.tx_id, 0))
        return tx

    def implicit_intervals(self, world: "WorldState", node: int, elapsed: SimTime) -> Iterator[Interval]:
        yield (0, elapsed, RadioState.LISTEN)
