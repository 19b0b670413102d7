"""Simulation state of one repetition and the kernel handlers that drive it."""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from llnsim.config import ScenarioConfig
from llnsim.errors import InvariantViolation
from llnsim.events import WORLD, Event, EventKind, TimerTag
from llnsim.kernel import Kernel, KernelStats
from llnsim.mobility.base import MobilityTrace, Position, position_at
from llnsim.power import CpuCostModel, PowerLedger
from llnsim.radio import get_rdc
from llnsim.radio.activity import RadioActivity, merge_activity, summarize
from llnsim.radio.base import MacOutcome
from llnsim.radio.mac import Mac
from llnsim.radio.medium import CONTROL_KINDS, Frame, FrameKind, Medium, neighbors_in_range
from llnsim.rng import RngStreams
from llnsim.rpl.node import RplAgent
from llnsim.simtime import TICKS_PER_SECOND, SimTime, seconds_to_ticks

logger = logging.getLogger("llnsim")

RESAMPLE_TICKS = TICKS_PER_SECOND

# Event kinds whose handling counts as processing a message.
MESSAGE_EVENTS = (EventKind.FRAME_ARRIVAL, EventKind.APP_SEND)


def event_cpu_ticks(kind: EventKind, target: int, cost: CpuCostModel) -> SimTime:
    """CPU ticks charged to ``target`` for dispatching one event."""
    if target == WORLD:
        return 0
    if kind in MESSAGE_EVENTS:
        return seconds_to_ticks(cost.message)
    return seconds_to_ticks(cost.timer)


def log_header(rep: int, n_nodes: int, sinks: Sequence[int], elapsed: SimTime) -> str:
    return f"# rep {rep} nodes={n_nodes} sinks={','.join(map(str, sinks))} elapsed={elapsed}"


@dataclass
class RunLogs:
    """In-memory dump buffers; a disabled dump is None."""

    events: Optional[List[str]] = None
    radio: Optional[List[str]] = None
    control: Optional[List[str]] = None


@dataclass
class NodeState:
    node_id: int
    is_sink: bool
    phase: SimTime
    mac: Mac
    activity: RadioActivity
    ledger: PowerLedger = field(default_factory=PowerLedger)
    agent: Optional[RplAgent] = None
    rx_until: SimTime = 0


class WorldState:
    """Nodes, medium, duty-cycling layer and kernel of a single repetition."""

    def __init__(
        self,
        cfg: ScenarioConfig,
        rep: int,
        placements: Sequence[Position],
        traces: Optional[Sequence[MobilityTrace]] = None,
    ):
        self.cfg = cfg
        self.rep = rep
        self.elapsed = seconds_to_ticks(cfg.duration)
        self.streams = RngStreams(cfg.seed, rep)
        self.placements = np.asarray(placements, dtype=float).reshape(-1, 2)
        self.traces = list(traces) if traces is not None else None
        self.mobile = self.traces is not None and any(not t.is_static() for t in self.traces)
        self.logs = RunLogs(
            events=[] if cfg.logs.events else None,
            radio=[] if cfg.logs.radio else None,
            control=[] if cfg.logs.control else None,
        )
        self.kernel = Kernel(
            {
                EventKind.TIMER_EXPIRY: self._on_timer,
                EventKind.FRAME_ARRIVAL: self._on_frame_arrival,
                EventKind.WAKE_SAMPLE: self._on_wake_sample,
                EventKind.APP_SEND: self._on_app_send,
                EventKind.WAYPOINT_UPDATE: self._on_resample,
            },
            event_log=self.logs.events,
        )
        self.kernel.on_dispatch = self._charge_cpu
        self.rdc = get_rdc(cfg.radio.rdc, cfg.radio.frame_sizes)
        self.medium = Medium(
            cfg.radio.udgm,
            self.position,
            loss_rng=lambda node: self.streams.node("radio-loss", node),
        )
        self._cpu_ticks = {
            kind: event_cpu_ticks(kind, 0, cfg.cpu_cost) for kind in EventKind
        }
        self._cache_t: Optional[SimTime] = None
        self._cache_pos: Optional[np.ndarray] = None
        self._static_neighbors: Optional[List[List[int]]] = None
        self._adjacency: Set[Tuple[int, int]] = set()
        self.topology_changes = 0
        self.dangling_chains = 0
        self.control_sent: List[Counter] = []
        self.data_period = seconds_to_ticks(cfg.data_period)

        sinks = set(cfg.sink_ids)
        self.nodes: List[NodeState] = []
        for i in range(cfg.n_nodes):
            node = NodeState(
                node_id=i,
                is_sink=i in sinks,
                phase=int(self.streams.node("rdc-phase", i).integers(0, self.rdc.wake_interval)),
                mac=Mac(i, cfg.radio.mac, self.rdc.wake_interval, self.streams.node("mac-backoff", i)),
                activity=RadioActivity(i),
            )
            self.nodes.append(node)
            self.control_sent.append(Counter())
        for node in self.nodes:
            node.agent = RplAgent(
                node.node_id,
                node.is_sink,
                cfg.rpl,
                self,
                self.streams.node("trickle", node.node_id),
                self.streams.node("rpl-jitter", node.node_id),
            )

    # -- geometry -----------------------------------------------------------

    def positions_at(self, t: SimTime) -> np.ndarray:
        if not self.mobile:
            return self.placements
        if t != self._cache_t:
            self._cache_pos = np.array([position_at(tr, t) for tr in self.traces], dtype=float)
            self._cache_t = t
        return self._cache_pos

    def position(self, node: int, t: SimTime) -> Position:
        if not self.mobile:
            x, y = self.placements[node]
        else:
            x, y = position_at(self.traces[node], t)
        return (float(x), float(y))

    def candidates(self, src: int, t: SimTime) -> List[int]:
        """Nodes within transmission range of ``src`` at ``t``."""
        if not self.mobile and self._static_neighbors is not None:
            return self._static_neighbors[src]
        pos = self.positions_at(t)
        dist = np.hypot(pos[:, 0] - pos[src, 0], pos[:, 1] - pos[src, 1])
        found = [int(i) for i in np.nonzero(dist <= self.cfg.radio.udgm.tx_range)[0] if i != src]
        return found

    def activity(self, node: int) -> RadioActivity:
        return self.nodes[node].activity

    # -- boot and run -------------------------------------------------------

    def boot(self) -> None:
        if not self.mobile:
            self._static_neighbors = [self.candidates(i, 0) for i in range(len(self.nodes))]
        self._adjacency = neighbors_in_range(self.positions_at(0), self.cfg.radio.udgm)
        jitter_max = seconds_to_ticks(self.cfg.rpl.boot_jitter)
        data_start = seconds_to_ticks(self.cfg.data_start)
        for node in self.nodes:
            i = node.node_id
            if node.is_sink:
                self.kernel.schedule_at(0, i, EventKind.TIMER_EXPIRY, TimerTag.SINK_INIT)
                continue
            boot = int(self.streams.node("rpl-jitter", i).integers(0, jitter_max)) if jitter_max > 0 else 0
            self.kernel.schedule_at(boot, i, EventKind.TIMER_EXPIRY, TimerTag.ND_START)
            first = data_start + int(self.streams.node("app-jitter", i).integers(0, self.data_period))
            self.kernel.schedule_at(first, i, EventKind.APP_SEND)
        if self.mobile:
            self.kernel.schedule_at(RESAMPLE_TICKS, WORLD, EventKind.WAYPOINT_UPDATE)

    def run(self) -> KernelStats:
        """Boot, run to the configured duration and close the ledgers."""
        self.boot()
        stats = self.kernel.run_until(self.elapsed)
        self.check_invariants()
        self.finalize()
        return stats

    def finalize(self) -> None:
        for node in self.nodes:
            explicit = node.activity.explicit_intervals()
            implicit = self.rdc.implicit_intervals(self, node.node_id, self.elapsed)
            merged = list(merge_activity(explicit, implicit, self.elapsed))
            totals = summarize(merged)
            node.ledger.add_tx(totals.tx_ticks)
            node.ledger.add_listen(totals.listen_ticks)
            node.ledger.finalize(self.elapsed)
            if self.logs.radio is not None:
                for start, end, state in merged:
                    self.logs.radio.append(f"{start}\t{end}\t{node.node_id}\t{state.value}")

    def check_invariants(self) -> None:
        """Preferred-parent graph is acyclic and rank strictly grows downward.

        A chain ending at a detached node whose poison has not reached its
        children yet is legal; each one found is added to ``dangling_chains``.
        """
        limit = len(self.nodes)
        for node in self.nodes:
            agent = node.agent
            if agent.is_sink or not agent.joined:
                continue
            parent = agent.preferred_parent
            entry = agent.parents.get(parent) if parent is not None else None
            if entry is None or agent.rank <= entry.rank:
                raise InvariantViolation(
                    "rank-monotone",
                    f"node {node.node_id} rank {agent.rank} via parent {parent} "
                    f"advertising {entry.rank if entry else None}",
                )
            seen = {node.node_id}
            cursor: Optional[int] = parent
            for _ in range(limit):
                if cursor is None or self.nodes[cursor].agent.is_sink:
                    break
                if not self.nodes[cursor].agent.joined:
                    self.dangling_chains += 1
                    break
                if cursor in seen:
                    raise InvariantViolation("dodag-acyclic", f"cycle through node {cursor} from {node.node_id}")
                seen.add(cursor)
                cursor = self.nodes[cursor].agent.preferred_parent

    # -- services used by the protocol layers --------------------------------

    def send(self, node: int, kind: FrameKind, dst: int, payload: object) -> bool:
        frame = Frame(node, dst, kind, self.cfg.radio.frame_sizes.size_of(kind), payload)
        return self.nodes[node].mac.enqueue(self, frame)

    def receive(self, receiver: int, frame: Frame) -> None:
        now = self.kernel.now
        if frame.kind in CONTROL_KINDS and self.logs.control is not None:
            self.logs.control.append(f"{now}\t{receiver}\t{frame.kind.value}\trecv\t{frame.src}")
        self.nodes[receiver].agent.on_frame(frame, now)

    def on_first_air(self, node: int, frame: Frame) -> None:
        if frame.kind not in CONTROL_KINDS:
            return
        self.control_sent[node][frame.kind] += 1
        if self.logs.control is not None:
            self.logs.control.append(
                f"{self.kernel.now}\t{node}\t{frame.kind.value}\tsent\t{frame.peer_label()}"
            )

    def on_tx_result(self, node: int, frame: Frame, success: bool, attempts: int) -> None:
        now = self.kernel.now
        if not frame.is_broadcast and attempts > 0 and self.logs.control is not None:
            self.logs.control.append(
                f"{now}\t{node}\tTXRESULT\tsent\t{frame.dst}\t{attempts if success else 0}"
            )
        self.nodes[node].agent.on_tx_result(frame, success, attempts, now)

    def log_data_sent(self, node: int, seq: int) -> None:
        if self.logs.control is None:
            return
        parent = self.nodes[node].agent.preferred_parent
        peer = "-" if parent is None else str(parent)
        self.logs.control.append(f"{self.kernel.now}\t{node}\tDATA\tsent\t{peer}")

    def log_data_recv(self, sink: int, source: int, hops: int) -> None:
        if self.logs.control is not None:
            self.logs.control.append(f"{self.kernel.now}\t{sink}\tDATA\trecv\t{source}\t{hops}")

    # -- handlers -----------------------------------------------------------

    def _charge_cpu(self, event: Event) -> None:
        if event.target != WORLD:
            self.nodes[event.target].ledger.add_cpu(self._cpu_ticks[event.kind])

    def _on_timer(self, event: Event) -> None:
        node = self.nodes[event.target]
        now = event.fire_time
        if event.tag == TimerTag.MAC_ATTEMPT.value:
            node.mac.on_attempt(self, now)
        elif event.tag == TimerTag.MAC_DONE.value:
            node.mac.on_done(self, MacOutcome(event.args[1]), now)
        elif event.tag == TimerTag.PROBE_WAIT.value:
            self.rdc.on_probe_wait(self, node.node_id, event.args, now)
        else:
            node.agent.on_timer(event.tag, now)

    def _on_frame_arrival(self, event: Event) -> None:
        tx_id, k = event.args
        self.rdc.on_arrival(self, event.target, tx_id, k, event.fire_time)

    def _on_wake_sample(self, event: Event) -> None:
        self.rdc.on_wake_sample(self, event.target, event.args[0], event.fire_time)

    def _on_app_send(self, event: Event) -> None:
        self.nodes[event.target].agent.app_send(event.fire_time)
        self.kernel.schedule_at(event.fire_time + self.data_period, event.target, EventKind.APP_SEND)

    def _on_resample(self, event: Event) -> None:
        now = event.fire_time
        adjacency = neighbors_in_range(self.positions_at(now), self.cfg.radio.udgm)
        self.topology_changes += len(adjacency ^ self._adjacency)
        self._adjacency = adjacency
        self.check_invariants()
        self.kernel.schedule_at(now + RESAMPLE_TICKS, WORLD, EventKind.WAYPOINT_UPDATE)

    # -- results ------------------------------------------------------------

    def delivered_from(self, source: int) -> Tuple[int, int]:
        """Packets from ``source`` received by any sink, and their hop sum."""
        count = hops = 0
        for node in self.nodes:
            if node.is_sink:
                stats = node.agent.delivered.get(source)
                if stats is not None:
                    count += stats.count
                    hops += stats.hop_sum
        return count, hops

    def radio_control_frames(self) -> int:
        return sum(n for kind, n in self.medium.frames_on_air.items() if kind in CONTROL_KINDS)

    def control_totals(self) -> Dict[str, int]:
        totals: Counter = Counter()
        for counts in self.control_sent:
            totals.update(counts)
        return {kind.value: totals.get(kind, 0) for kind in CONTROL_KINDS}
