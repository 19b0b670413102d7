"""Per-node RPL agent: neighbour discovery, DODAG upkeep and the data plane."""

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Dict, List, Optional, Set, Tuple

import numpy as np

from llnsim.errors import ConfigError
from llnsim.events import EventKind, TimerTag
from llnsim.kernel import EventHandle
from llnsim.radio.medium import BROADCAST, Frame, FrameKind
from llnsim.rpl.etx import EtxEstimator
from llnsim.rpl.messages import (
    PREFIX,
    DataPacket,
    Dao,
    Dio,
    Dis,
    Na,
    NaStatus,
    Ns,
    Ocp,
    Ra,
    Rs,
    global_address,
)
from llnsim.rpl.objective import (
    INFINITE_RANK,
    ROOT_RANK,
    ParentEntry,
    compute_rank,
    evict_stale,
    select_parent,
)
from llnsim.rpl.trickle import TrickleTimer
from llnsim.simtime import SimTime, seconds_to_ticks

if TYPE_CHECKING:
    from llnsim.world import WorldState


@dataclass(frozen=True)
class RplConfig:
    """Protocol constants; durations in seconds."""

    instance_id: int = 1
    ocp: str = "mrhof"
    trickle_i_min: float = 4.096
    trickle_doublings: int = 8
    trickle_k: int = 10
    dao_interval: float = 60.0
    route_lifetime: Optional[float] = None
    dao_retry_delay: float = 5.0
    dis_interval: float = 30.0
    rs_retry: float = 10.0
    rs_retry_max: float = 60.0
    nd_cache_size: int = 32
    etx_alpha: float = 0.9
    etx_initial: float = 1.0
    etx_noack_penalty: float = 10.0
    parent_fail_limit: int = 3
    stale_intervals: int = 3
    boot_jitter: float = 1.0
    max_hops: int = 64

    @property
    def lifetime(self) -> float:
        return self.route_lifetime if self.route_lifetime is not None else 3 * self.dao_interval

    def validate(self) -> None:
        try:
            Ocp(self.ocp)
        except ValueError as exc:
            raise ConfigError(f"rpl.ocp must be one of {[o.value for o in Ocp]}, got {self.ocp!r}") from exc
        positive = {
            "trickle_i_min": self.trickle_i_min,
            "dao_interval": self.dao_interval,
            "dao_retry_delay": self.dao_retry_delay,
            "dis_interval": self.dis_interval,
            "rs_retry": self.rs_retry,
            "rs_retry_max": self.rs_retry_max,
            "lifetime": self.lifetime,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ConfigError(f"rpl.{name} must be > 0, got {value}")
        if self.trickle_doublings < 0 or self.trickle_k < 1:
            raise ConfigError("rpl: need trickle_doublings >= 0 and trickle_k >= 1")
        if not 0 <= self.etx_alpha < 1:
            raise ConfigError(f"rpl.etx_alpha must be in [0, 1), got {self.etx_alpha}")
        if self.etx_initial < 1 or self.etx_noack_penalty < 1:
            raise ConfigError("rpl: ETX values must be >= 1")
        if self.nd_cache_size < 1 or self.parent_fail_limit < 1 or self.stale_intervals < 1:
            raise ConfigError("rpl: nd_cache_size, parent_fail_limit and stale_intervals must be >= 1")
        if self.boot_jitter < 0:
            raise ConfigError("rpl.boot_jitter must be >= 0")
        if self.max_hops < 1:
            raise ConfigError("rpl.max_hops must be >= 1")


@dataclass
class DeliveryStats:
    """Packets a sink received from one source."""

    count: int = 0
    hop_sum: int = 0


class RplAgent:
    """RPL state machine of one node.

    Timers arrive as ``timer-expiry`` events carrying a :class:`TimerTag`;
    frames arrive through :meth:`on_frame` once the radio decoded them.
    """

    def __init__(
        self,
        node_id: int,
        is_sink: bool,
        cfg: RplConfig,
        world: "WorldState",
        trickle_rng: np.random.Generator,
        jitter_rng: np.random.Generator,
    ):
        self.node_id = node_id
        self.is_sink = is_sink
        self.cfg = cfg
        self.world = world
        self.ocp = Ocp(cfg.ocp)
        self.jitter_rng = jitter_rng

        self.rank = INFINITE_RANK
        self.lowest_rank = INFINITE_RANK
        self.preferred_parent: Optional[int] = None
        self.solicited_at: Optional[SimTime] = None
        self.parents: Dict[int, ParentEntry] = {}
        self.joined = False
        self.dodag_id: Optional[int] = None
        self.version = 0
        self.trickle = TrickleTimer(
            seconds_to_ticks(cfg.trickle_i_min), cfg.trickle_doublings, cfg.trickle_k, trickle_rng
        )
        self.routes: Dict[int, Tuple[int, SimTime]] = {}
        self.dao_seq = 0
        self.etx = EtxEstimator(cfg.etx_alpha, cfg.etx_initial, cfg.etx_noack_penalty)
        self.fail_streak = 0

        self.nd_done = False
        self.address: Optional[str] = None
        self.default_router: Optional[int] = None
        self.ra_sources: List[int] = []
        self.ns_target: Optional[int] = None
        self.rs_delay = seconds_to_ticks(cfg.rs_retry)
        self.neighbor_cache: Set[int] = set()

        self.app_seq = 0
        self.app_sent = 0
        self.delivered: Dict[int, DeliveryStats] = {}
        self._seen: Set[Tuple[int, int]] = set()

        self._handles: Dict[str, EventHandle] = {}

    # -- scheduling helpers -------------------------------------------------

    @property
    def now(self) -> SimTime:
        return self.world.kernel.now

    def _set_timer(self, tag: TimerTag, at: SimTime) -> None:
        self._cancel_timer(tag)
        self._handles[tag.value] = self.world.kernel.schedule_at(
            at, self.node_id, EventKind.TIMER_EXPIRY, tag
        )

    def _cancel_timer(self, tag: TimerTag) -> None:
        handle = self._handles.pop(tag.value, None)
        if handle is not None:
            self.world.kernel.cancel(handle)

    def _send(self, kind: FrameKind, dst: int, payload: object) -> bool:
        return self.world.send(self.node_id, kind, dst, payload)

    def on_timer(self, tag: str, now: SimTime) -> None:
        tag = TimerTag(tag)
        self._handles.pop(tag.value, None)
        if tag is TimerTag.SINK_INIT:
            self.sink_init(now)
        elif tag in (TimerTag.ND_START, TimerTag.RS_RETRY):
            self.send_rs(now)
        elif tag is TimerTag.TRICKLE_FIRE:
            self.trickle_fire(now)
        elif tag is TimerTag.TRICKLE_END:
            self.trickle_end(now)
        elif tag is TimerTag.DAO:
            self.send_dao(now)
        elif tag is TimerTag.DIS:
            self.send_dis(now)

    # -- neighbour discovery ------------------------------------------------

    @property
    def is_router(self) -> bool:
        return self.is_sink or self.nd_done

    def send_rs(self, now: SimTime) -> None:
        """Multicast a router solicitation and arm the retry timer."""
        if self.nd_done:
            return
        self.ns_target = None
        self.ra_sources.clear()
        self._send(FrameKind.RS, BROADCAST, Rs())
        self._set_timer(TimerTag.RS_RETRY, now + self.rs_delay)
        self.rs_delay = min(2 * self.rs_delay, seconds_to_ticks(self.cfg.rs_retry_max))

    def _handle_rs(self, src: int) -> None:
        if self.is_router:
            self._send(FrameKind.RA, src, Ra(pio=PREFIX, co=(0, PREFIX), abro=self.dodag_id or 0))

    def _handle_ra(self, src: int) -> None:
        if self.nd_done or src in self.ra_sources:
            return
        self.ra_sources.append(src)
        if self.ns_target is None:
            self._register_next()

    def _register_next(self) -> None:
        """Send NS to the earliest RA source not tried yet.

        The RS retry timer doubles as the NA timeout.
        """
        tried = self.ra_sources.index(self.ns_target) + 1 if self.ns_target in self.ra_sources else 0
        if tried >= len(self.ra_sources):
            self.ns_target = None
            self.ra_sources.clear()
            self._set_timer(TimerTag.RS_RETRY, self.now + self.rs_delay)
            return
        self.ns_target = self.ra_sources[tried]
        self.address = global_address(PREFIX, self.node_id)
        self._send(FrameKind.NS, self.ns_target, Ns(aro=(self.node_id, self.address)))
        self._set_timer(TimerTag.RS_RETRY, self.now + self.rs_delay)

    def _handle_ns(self, src: int) -> None:
        if not self.is_router:
            return
        if src in self.neighbor_cache or len(self.neighbor_cache) < self.cfg.nd_cache_size:
            self.neighbor_cache.add(src)
            self._send(FrameKind.NA, src, Na(NaStatus.OK))
        else:
            self._send(FrameKind.NA, src, Na(NaStatus.FULL))

    def _handle_na(self, src: int, na: Na, now: SimTime) -> None:
        if self.nd_done or src != self.ns_target:
            return
        if na.status is NaStatus.OK:
            self.nd_done = True
            self.default_router = src
            self.ns_target = None
            self._cancel_timer(TimerTag.RS_RETRY)
            if not self.joined:
                self._set_timer(TimerTag.DIS, now + seconds_to_ticks(self.cfg.dis_interval))
        else:
            self._register_next()

    # -- DODAG --------------------------------------------------------------

    def sink_init(self, now: SimTime) -> None:
        self.rank = ROOT_RANK
        self.version = 1
        self.dodag_id = self.node_id
        self.joined = True
        self.nd_done = True
        self.start_trickle(now)

    def start_trickle(self, now: SimTime) -> None:
        self._arm_trickle(*self.trickle.start(now))

    def trickle_reset(self, now: SimTime) -> None:
        self._arm_trickle(*self.trickle.reset(now))

    def _arm_trickle(self, fire_at: SimTime, end_at: SimTime) -> None:
        self._set_timer(TimerTag.TRICKLE_FIRE, fire_at)
        self._set_timer(TimerTag.TRICKLE_END, end_at)

    def _stop_trickle(self) -> None:
        self.trickle.stop()
        self._cancel_timer(TimerTag.TRICKLE_FIRE)
        self._cancel_timer(TimerTag.TRICKLE_END)

    def trickle_fire(self, now: SimTime) -> None:
        if self.joined and self.trickle.fire():
            self._send_dio(self.rank)

    def trickle_end(self, now: SimTime) -> None:
        if not self.joined:
            return
        if not self.is_sink and self.reselect(now) and not self.joined:
            return
        if self.trickle.running and now >= self.trickle.interval_start + self.trickle.interval:
            self._arm_trickle(*self.trickle.expire(now))

    def _send_dio(self, rank: int, dst: int = BROADCAST) -> None:
        dodag = self.dodag_id if self.dodag_id is not None else self.node_id
        self._send(FrameKind.DIO, dst, Dio(self.cfg.instance_id, dodag, self.version, rank, self.ocp))

    def handle_dio(self, src: int, dio: Dio, now: SimTime) -> None:
        if not self.nd_done:
            return
        if dio.rank >= INFINITE_RANK:
            if self.parents.pop(src, None) is not None and src == self.preferred_parent:
                self.reselect(now)
            return
        if self.is_sink:
            if dio.dodag_id == self.dodag_id:
                self.trickle.hear_consistent()
            return
        self.parents[src] = ParentEntry(src, dio.rank, dio.dodag_id, dio.version, now)
        if src == self.preferred_parent:
            self.solicited_at = None
        changed = self.reselect(now)
        if not changed and self.joined:
            self.trickle.hear_consistent()

    def _evict_stale(self, now: SimTime) -> None:
        """Drop neighbours silent for ``stale_intervals`` trickle intervals.

        A quiet preferred parent is first sent a unicast DIS and kept for
        ``i_min`` while the answer is due.
        """
        interval = self.trickle.interval
        window = self.cfg.stale_intervals * interval
        keep: Tuple[int, ...] = ()
        entry = self.parents.get(self.preferred_parent) if self.preferred_parent is not None else None
        if entry is not None and now - entry.last_heard > window - interval:
            if self.solicited_at is None:
                self._send(FrameKind.DIS, entry.node_id, Dis())
                self.solicited_at = now
            if now - self.solicited_at < self.trickle.i_min:
                keep = (entry.node_id,)
        evict_stale(self.parents, now, window, keep)

    def reselect(self, now: SimTime) -> bool:
        """Re-run parent selection; True if rank, parent or membership changed.

        A candidate must advertise a rank below the lowest rank this node has
        held since it joined, and must not be a known descendant.
        """
        if self.is_sink:
            return False
        self._evict_stale(now)
        descendants = set(self.live_routes(now))
        best = select_parent(self.parents, self.ocp, self.etx.get, self.lowest_rank, descendants)
        if best is None:
            if self.joined:
                self.detach(now)
                return True
            return False
        new_rank = compute_rank(self.ocp, best.rank, self.etx.get(best.node_id))
        parent_changed = best.node_id != self.preferred_parent
        rank_changed = new_rank != self.rank
        first_join = not self.joined
        self.rank = new_rank
        self.lowest_rank = min(self.lowest_rank, new_rank)
        self.preferred_parent = best.node_id
        self.dodag_id = best.dodag_id
        self.version = best.version
        if parent_changed:
            self.fail_streak = 0
            self.solicited_at = None
        if first_join:
            self.joined = True
            self._cancel_timer(TimerTag.DIS)
            self.start_trickle(now)
            self._schedule_dao_soon(now)
        elif parent_changed:
            self.trickle_reset(now)
            self._schedule_dao_soon(now)
        elif rank_changed:
            self.trickle_reset(now)
        return first_join or parent_changed or rank_changed

    def detach(self, now: SimTime) -> None:
        """Leave the DODAG: poison the sub-DODAG, forget candidates, solicit."""
        self.joined = False
        self.rank = INFINITE_RANK
        self.lowest_rank = INFINITE_RANK
        self.preferred_parent = None
        self.solicited_at = None
        self.parents.clear()
        self.fail_streak = 0
        self._stop_trickle()
        self._cancel_timer(TimerTag.DAO)
        self._send_dio(INFINITE_RANK)
        self._set_timer(TimerTag.DIS, now)

    def send_dis(self, now: SimTime) -> None:
        if self.joined or self.is_sink:
            return
        self._send(FrameKind.DIS, BROADCAST, Dis())
        self._set_timer(TimerTag.DIS, now + seconds_to_ticks(self.cfg.dis_interval))

    def handle_dis(self, now: SimTime, src: Optional[int] = None) -> None:
        """A multicast DIS resets trickle; a unicast one gets a unicast DIO."""
        if not self.joined:
            return
        if src is None:
            self.trickle_reset(now)
        else:
            self._send_dio(self.rank, src)

    # -- downward routes ----------------------------------------------------

    def _schedule_dao_soon(self, now: SimTime) -> None:
        jitter = int(self.jitter_rng.integers(0, seconds_to_ticks(1.0)))
        self._set_timer(TimerTag.DAO, now + jitter)

    def send_dao(self, now: SimTime) -> None:
        if not self.joined or self.preferred_parent is None:
            return
        self.dao_seq += 1
        self._send(FrameKind.DAO, self.preferred_parent, Dao(self.cfg.instance_id, self.node_id, self.dao_seq))
        self._set_timer(TimerTag.DAO, now + seconds_to_ticks(self.cfg.dao_interval))

    def handle_dao(self, src: int, dao: Dao, now: SimTime) -> None:
        if not self.joined:
            return
        self.routes[dao.target] = (src, now + seconds_to_ticks(self.cfg.lifetime))
        if not self.is_sink and self.preferred_parent is not None:
            self._send(FrameKind.DAO, self.preferred_parent, dao)

    def live_routes(self, now: SimTime) -> Dict[int, int]:
        """Downward routes ``target -> next hop`` that have not expired."""
        return {t: hop for t, (hop, expiry) in self.routes.items() if expiry >= now}

    # -- data plane ---------------------------------------------------------

    def app_send(self, now: SimTime) -> None:
        self.app_seq += 1
        self.app_sent += 1
        self.world.log_data_sent(self.node_id, self.app_seq)
        if self.joined and self.preferred_parent is not None:
            packet = DataPacket(self.node_id, self.app_seq, now)
            self._send(FrameKind.DATA, self.preferred_parent, packet)

    def _handle_data(self, packet: DataPacket, now: SimTime) -> None:
        packet = replace(packet, hops=packet.hops + 1)
        if self.is_sink:
            key = (packet.source, packet.seq)
            if key in self._seen:
                return
            self._seen.add(key)
            stats = self.delivered.setdefault(packet.source, DeliveryStats())
            stats.count += 1
            stats.hop_sum += packet.hops
            self.world.log_data_recv(self.node_id, packet.source, packet.hops)
            return
        if self.joined and self.preferred_parent is not None and packet.hops < self.cfg.max_hops:
            self._send(FrameKind.DATA, self.preferred_parent, packet)

    # -- radio callbacks ----------------------------------------------------

    def on_frame(self, frame: Frame, now: SimTime) -> None:
        kind, src, payload = frame.kind, frame.src, frame.payload
        if kind is FrameKind.DIO:
            self.handle_dio(src, payload, now)
        elif kind is FrameKind.DIS:
            self.handle_dis(now, None if frame.is_broadcast else src)
        elif kind is FrameKind.DAO:
            self.handle_dao(src, payload, now)
        elif kind is FrameKind.DATA:
            self._handle_data(payload, now)
        elif kind is FrameKind.RS:
            self._handle_rs(src)
        elif kind is FrameKind.RA:
            self._handle_ra(src)
        elif kind is FrameKind.NS:
            self._handle_ns(src)
        elif kind is FrameKind.NA:
            self._handle_na(src, payload, now)

    def on_tx_result(self, frame: Frame, success: bool, attempts: int, now: SimTime) -> None:
        if frame.is_broadcast:
            return
        if frame.kind is FrameKind.NS and not success and frame.dst == self.ns_target:
            self._register_next()
        if frame.kind is FrameKind.DAO and not success and frame.payload.target == self.node_id:
            if self.joined:
                self._set_timer(TimerTag.DAO, now + seconds_to_ticks(self.cfg.dao_retry_delay))
        if attempts == 0:
            return
        self.etx.update(frame.dst, attempts, success)
        if not self.joined or self.is_sink:
            return
        if frame.dst == self.preferred_parent:
            if success:
                self.fail_streak = 0
            else:
                self.fail_streak += 1
                if self.fail_streak >= self.cfg.parent_fail_limit:
                    self.parents.pop(frame.dst, None)
                    self.fail_streak = 0
        self.reselect(now)
