"""Tests for the rpl package - trickle, ranks, ETX and the node agent."""

import pytest

from llnsim.kernel import Kernel
from llnsim.radio.medium import BROADCAST, Frame, FrameKind
from llnsim.rng import rng_stream
from llnsim.rpl import (
    INFINITE_RANK,
    ROOT_RANK,
    Dao,
    DataPacket,
    Dio,
    Dis,
    EtxEstimator,
    Na,
    NaStatus,
    Ocp,
    ParentEntry,
    Ra,
    RplAgent,
    RplConfig,
    TrickleTimer,
    compute_rank,
    select_parent,
)
from llnsim.rpl.objective import evict_stale
from llnsim.simtime import seconds_to_ticks

I_MIN = seconds_to_ticks(4.096)


class TestTrickleTimer:
    """Tests for the trickle state machine."""

    def test_first_fire_in_second_half(self) -> None:
        """Test the fire point lies in [I/2, I)."""
        for seed in range(20):
            timer = TrickleTimer(I_MIN, 8, 10, rng_stream(seed, "trickle"))
            fire, end = timer.start(0)
            assert I_MIN // 2 <= fire < I_MIN
            assert end == I_MIN

    def test_intervals_double_up_to_cap(self) -> None:
        """Test a quiet network doubles the interval until i_min * 2^doublings."""
        timer = TrickleTimer(1000, 3, 10, rng_stream(1, "trickle"))
        _, end = timer.start(0)
        lengths = [timer.interval]
        for _ in range(5):
            _, end = timer.expire(end)
            lengths.append(timer.interval)
        assert lengths == [1000, 2000, 4000, 8000, 8000, 8000]

    def test_redundancy_suppresses_fire(self) -> None:
        """Test k consistent messages suppress the transmission."""
        timer = TrickleTimer(1000, 3, 2, rng_stream(1, "trickle"))
        timer.start(0)
        timer.hear_consistent()
        assert timer.fire()
        timer.hear_consistent()
        assert not timer.fire()

    def test_reset_returns_to_i_min(self) -> None:
        """Test an inconsistency during a long interval restarts at i_min."""
        timer = TrickleTimer(1000, 3, 2, rng_stream(1, "trickle"))
        _, end = timer.start(0)
        for _ in range(3):
            _, end = timer.expire(end)
        assert timer.interval == 8000
        fire, new_end = timer.reset(end + 10)
        assert timer.interval == 1000
        assert new_end == end + 1010
        assert timer.counter == 0

    def test_bad_parameters_rejected(self) -> None:
        """Test k must be positive."""
        with pytest.raises(ValueError):
            TrickleTimer(1000, 3, 0, rng_stream(1, "trickle"))


class TestComputeRank:
    """Tests for compute_rank."""

    def test_of0_adds_one_hop(self) -> None:
        """Test OF0 from the root gives 512."""
        assert compute_rank(Ocp.OF0, ROOT_RANK) == 512

    def test_mrhof_scales_with_etx(self) -> None:
        """Test MRHOF with ETX 1.5 from the root gives 640."""
        assert compute_rank(Ocp.MRHOF, 256, 1.5) == 640

    @pytest.mark.parametrize("ocp", [Ocp.OF0, Ocp.MRHOF])
    @pytest.mark.parametrize("parent", [256, 700, 30000])
    def test_rank_grows_strictly(self, ocp: Ocp, parent: int) -> None:
        """Test the result is always above the parent's rank."""
        assert compute_rank(ocp, parent, 1.0) > parent

    def test_overflow_is_infinite(self) -> None:
        """Test a rank past the maximum is unreachable."""
        assert compute_rank(Ocp.MRHOF, 65000, 10.0) == INFINITE_RANK
        assert compute_rank(Ocp.OF0, INFINITE_RANK) == INFINITE_RANK


def _entry(node_id: int, rank: int, dodag: int = 0, heard: int = 0) -> ParentEntry:
    return ParentEntry(node_id, rank, dodag, 1, heard)


class TestSelectParent:
    """Tests for select_parent and evict_stale."""

    def test_single_candidate_chosen(self) -> None:
        """Test the only candidate wins."""
        parents = {4: _entry(4, 256)}
        assert select_parent(parents, Ocp.OF0, lambda n: 1.0).node_id == 4

    def test_equal_rank_lower_id_wins(self) -> None:
        """Test ties go to the lower node id."""
        parents = {9: _entry(9, 512), 3: _entry(3, 512)}
        assert select_parent(parents, Ocp.OF0, lambda n: 1.0).node_id == 3

    def test_better_link_beats_lower_id(self) -> None:
        """Test MRHOF prefers the lower resulting rank."""
        parents = {1: _entry(1, 256), 2: _entry(2, 256)}
        etx = {1: 2.0, 2: 1.0}
        assert select_parent(parents, Ocp.MRHOF, etx.__getitem__).node_id == 2

    def test_lower_dodag_id_breaks_rank_tie(self) -> None:
        """Test two DODAGs at equal rank resolve to the lower DODAG id."""
        parents = {1: _entry(1, 256, dodag=5), 2: _entry(2, 256, dodag=0)}
        assert select_parent(parents, Ocp.OF0, lambda n: 1.0).node_id == 2

    def test_poisoned_and_excluded_candidates_skipped(self) -> None:
        """Test infinite-rank and excluded candidates are never chosen."""
        parents = {1: _entry(1, INFINITE_RANK), 2: _entry(2, 256)}
        assert select_parent(parents, Ocp.OF0, lambda n: 1.0, exclude={2}) is None

    def test_rank_bound_is_strict(self) -> None:
        """Test a candidate advertising exactly the bound does not qualify."""
        parents = {2: _entry(2, 256), 3: _entry(3, 512)}
        assert select_parent(parents, Ocp.OF0, lambda n: 1.0, below=512, exclude={2}) is None
        assert select_parent(parents, Ocp.OF0, lambda n: 1.0, below=513, exclude={2}).node_id == 3

    def test_evict_stale(self) -> None:
        """Test entries older than max_age are dropped."""
        parents = {1: _entry(1, 256, heard=0), 2: _entry(2, 256, heard=90)}
        assert evict_stale(parents, 100, 50) == [1]
        assert list(parents) == [2]

    def test_evict_stale_keeps_listed(self) -> None:
        """Test ids in keep survive regardless of age."""
        parents = {1: _entry(1, 256, heard=0), 2: _entry(2, 256, heard=0)}
        assert evict_stale(parents, 100, 50, keep=(1,)) == [2]
        assert list(parents) == [1]


class TestEtxEstimator:
    """Tests for EtxEstimator."""

    def test_success_sample(self) -> None:
        """Test a 3-attempt delivery moves the estimate toward 3."""
        etx = EtxEstimator(alpha=0.9, initial=1.0)
        assert etx.update(4, 3, True) == pytest.approx(1.2)

    def test_failure_uses_penalty(self) -> None:
        """Test a failed unicast counts as the no-ack penalty."""
        etx = EtxEstimator(alpha=0.9, initial=1.0, noack_penalty=10.0)
        assert etx.update(4, 3, False) == pytest.approx(1.9)

    def test_mean_absent_without_samples(self) -> None:
        """Test the mean is absent before any unicast."""
        etx = EtxEstimator()
        assert etx.mean() is None
        assert etx.get(7) == 1.0


class FakeWorld:
    """Records what an agent sends; timers go to a bare kernel."""

    def __init__(self) -> None:
        self.kernel = Kernel()
        self.sent = []
        self.received = []

    def send(self, node: int, kind: FrameKind, dst: int, payload: object) -> bool:
        self.sent.append((kind, dst, payload))
        return True

    def log_data_sent(self, node: int, seq: int) -> None:
        pass

    def log_data_recv(self, sink: int, source: int, hops: int) -> None:
        self.received.append((source, hops))


def _agent(world: FakeWorld, node_id: int = 5, is_sink: bool = False, **cfg) -> RplAgent:
    return RplAgent(
        node_id, is_sink, RplConfig(**cfg), world,
        rng_stream(1, "trickle", node_id), rng_stream(1, "rpl-jitter", node_id),
    )


def _frame(src: int, dst: int, kind: FrameKind, payload: object) -> Frame:
    return Frame(src, dst, kind, 40, payload)


def _dio(rank: int, dodag: int = 0) -> Dio:
    return Dio(1, dodag, 1, rank, Ocp.MRHOF)


def _joined(world: FakeWorld, parent_rank: int = ROOT_RANK, **cfg) -> RplAgent:
    """Node 5 joined through node 0 advertising ``parent_rank``."""
    agent = _agent(world, **cfg)
    agent.nd_done = True
    agent.handle_dio(0, _dio(parent_rank), 0)
    return agent


class TestNeighborDiscovery:
    """Tests for the RS/RA/NS/NA exchange."""

    def test_first_ra_becomes_default_router(self) -> None:
        """Test the earliest advertising router is registered with."""
        world = FakeWorld()
        agent = _agent(world)
        agent.send_rs(0)
        agent.on_frame(_frame(1, 5, FrameKind.RA, Ra()), 10)
        agent.on_frame(_frame(2, 5, FrameKind.RA, Ra()), 20)
        agent.on_frame(_frame(1, 5, FrameKind.NA, Na(NaStatus.OK)), 30)
        assert [(k, d) for k, d, _ in world.sent] == [(FrameKind.RS, BROADCAST), (FrameKind.NS, 1)]
        assert agent.nd_done
        assert agent.default_router == 1

    def test_full_cache_moves_to_next_router(self) -> None:
        """Test an NA with status full sends NS to the next RA source."""
        world = FakeWorld()
        agent = _agent(world)
        agent.send_rs(0)
        agent.on_frame(_frame(1, 5, FrameKind.RA, Ra()), 10)
        agent.on_frame(_frame(2, 5, FrameKind.RA, Ra()), 20)
        agent.on_frame(_frame(1, 5, FrameKind.NA, Na(NaStatus.FULL)), 30)
        assert world.sent[-1][:2] == (FrameKind.NS, 2)
        agent.on_frame(_frame(2, 5, FrameKind.NA, Na(NaStatus.OK)), 40)
        assert agent.default_router == 2

    def test_rs_backoff_doubles_and_caps(self) -> None:
        """Test RS retries back off exponentially up to 60 s."""
        world = FakeWorld()
        agent = _agent(world)
        delays = []
        for _ in range(5):
            delays.append(agent.rs_delay)
            agent.send_rs(world.kernel.now)
        assert delays == [seconds_to_ticks(s) for s in (10, 20, 40, 60, 60)]
        assert not agent.nd_done

    def test_router_answers_rs_and_fills_cache(self) -> None:
        """Test a router with a full cache refuses registration."""
        world = FakeWorld()
        router = _agent(world, node_id=1, nd_cache_size=1)
        router.nd_done = True
        router.on_frame(_frame(5, 1, FrameKind.RS, None), 0)
        router.on_frame(_frame(5, 1, FrameKind.NS, None), 0)
        router.on_frame(_frame(6, 1, FrameKind.NS, None), 0)
        kinds = [(k, d) for k, d, _ in world.sent]
        assert kinds == [(FrameKind.RA, 5), (FrameKind.NA, 5), (FrameKind.NA, 6)]
        assert world.sent[1][2].status is NaStatus.OK
        assert world.sent[2][2].status is NaStatus.FULL

    def test_unregistered_node_ignores_rs(self) -> None:
        """Test a node without ND done is not a router."""
        world = FakeWorld()
        agent = _agent(world)
        agent.on_frame(_frame(6, 5, FrameKind.RS, None), 0)
        assert world.sent == []


class TestDodag:
    """Tests for joining and maintaining the DODAG."""

    def test_sink_first_dio_in_second_half_of_i_min(self) -> None:
        """Test a fresh sink schedules its first DIO in [i_min/2, i_min)."""
        world = FakeWorld()
        sink = _agent(world, node_id=0, is_sink=True)
        sink.sink_init(0)
        assert sink.rank == ROOT_RANK
        assert -(-I_MIN // 2) <= sink.trickle.fire_point < I_MIN

    def test_first_dio_joins(self) -> None:
        """Test an unjoined node joins through the sink's DIO."""
        world = FakeWorld()
        agent = _joined(world)
        assert agent.joined
        assert agent.preferred_parent == 0
        assert agent.rank == 512
        assert "dao" in agent._handles

    def test_dio_before_nd_ignored(self) -> None:
        """Test DIOs are ignored until neighbour discovery completes."""
        world = FakeWorld()
        agent = _agent(world)
        agent.handle_dio(0, _dio(256), 0)
        assert not agent.joined

    def test_worse_dio_counts_as_consistent(self) -> None:
        """Test a worse alternative leaves the parent and bumps the counter."""
        world = FakeWorld()
        agent = _joined(world)
        before = agent.trickle.counter
        agent.handle_dio(3, _dio(768), 10)
        assert agent.preferred_parent == 0
        assert agent.trickle.counter == before + 1

    def test_parent_rank_rise_switches_parent(self) -> None:
        """Test a worse advertised rank from the parent moves the node."""
        world = FakeWorld()
        agent = _joined(world, parent_rank=512)
        agent.handle_dio(3, _dio(512), 10)
        agent.trickle.expire(20)
        agent.handle_dio(0, _dio(640), 30)
        assert agent.preferred_parent == 3
        assert agent.rank == 768
        assert agent.trickle.interval == agent.trickle.i_min

    def test_parent_reaching_lowest_rank_detaches(self) -> None:
        """Test a parent advertising the node's own lowest rank is given up."""
        world = FakeWorld()
        agent = _joined(world)
        assert agent.lowest_rank == 512
        agent.handle_dio(0, _dio(512), 10)
        assert not agent.joined
        assert agent.parents == {}
        assert agent.lowest_rank == INFINITE_RANK
        kind, dst, dio = world.sent[-1]
        assert (kind, dst, dio.rank) == (FrameKind.DIO, BROADCAST, INFINITE_RANK)
        assert "dis" in agent._handles

    def test_detached_node_joins_from_advertised_rank_alone(self) -> None:
        """Test the only heard neighbour is chosen whatever its own parent is."""
        world = FakeWorld()
        agent = _agent(world, node_id=1)
        agent.nd_done = True
        neighbour = _agent(world, node_id=2)
        neighbour.preferred_parent = 1
        agent.parents[2] = _entry(2, 512)
        assert agent.reselect(0)
        assert (agent.preferred_parent, agent.rank) == (2, 768)

    def test_rejoin_after_detach_resets_lowest_rank(self) -> None:
        """Test a neighbour refused while joined is accepted after detaching."""
        world = FakeWorld()
        agent = _joined(world)
        agent.handle_dio(3, _dio(512), 10)
        assert agent.preferred_parent == 0
        agent.handle_dio(0, _dio(INFINITE_RANK), 20)
        assert not agent.joined
        agent.handle_dio(3, _dio(512), 30)
        assert (agent.preferred_parent, agent.rank, agent.lowest_rank) == (3, 768, 768)

    def test_descendant_never_chosen(self) -> None:
        """Test a neighbour with a live downward route is not a candidate."""
        world = FakeWorld()
        agent = _joined(world, parent_rank=512)
        agent.handle_dao(8, Dao(1, 8, 1), 10)
        agent.handle_dio(8, _dio(512), 20)
        agent.handle_dio(0, _dio(INFINITE_RANK), 30)
        assert not agent.joined

    def test_poison_from_parent_reselects(self) -> None:
        """Test an infinite-rank DIO from the parent drops it."""
        world = FakeWorld()
        agent = _joined(world, parent_rank=512)
        agent.handle_dio(3, _dio(512), 10)
        agent.handle_dio(0, _dio(INFINITE_RANK), 20)
        assert 0 not in agent.parents
        assert agent.preferred_parent == 3

    def test_silent_parent_evicted_after_three_intervals(self) -> None:
        """Test a parent quiet for three trickle intervals is dropped."""
        world = FakeWorld()
        agent = _joined(world)
        interval = agent.trickle.interval
        assert interval == I_MIN
        agent.reselect(2 * interval)
        assert world.sent == []
        agent.reselect(2 * interval + 1)
        assert [(k, d) for k, d, _ in world.sent] == [(FrameKind.DIS, 0)]
        assert not agent.reselect(3 * interval)
        assert agent.joined
        assert agent.reselect(3 * interval + 1)
        assert not agent.joined
        assert agent.parents == {}
        kind, dst, dio = world.sent[-1]
        assert (kind, dst, dio.rank) == (FrameKind.DIO, BROADCAST, INFINITE_RANK)

    def test_answering_parent_is_kept(self) -> None:
        """Test a DIO answering the unicast DIS refreshes the parent."""
        world = FakeWorld()
        agent = _joined(world)
        agent.reselect(2 * I_MIN + 1)
        agent.on_frame(_frame(0, 5, FrameKind.DIO, _dio(256)), 2 * I_MIN + 500)
        assert agent.solicited_at is None
        assert not agent.reselect(3 * I_MIN + 1)
        assert agent.preferred_parent == 0

    def test_stale_window_follows_current_interval(self) -> None:
        """Test a longer trickle interval widens the staleness window."""
        world = FakeWorld()
        agent = _joined(world)
        agent.handle_dio(3, _dio(512), 0)
        agent.trickle.expire(0)
        agent.trickle.expire(0)
        assert agent.trickle.interval == 4 * I_MIN
        agent.reselect(4 * I_MIN)
        assert 3 in agent.parents
        assert world.sent == []
        agent.reselect(12 * I_MIN + 1)
        assert 3 not in agent.parents
        assert agent.joined
        assert world.sent[-1][:2] == (FrameKind.DIS, 0)

    def test_dis_resets_joined_trickle(self) -> None:
        """Test a joined node answers DIS with a DIO within i_min."""
        world = FakeWorld()
        agent = _joined(world)
        agent.trickle.expire(100)
        agent.handle_dis(1000)
        assert agent.trickle.interval == agent.trickle.i_min
        assert agent.trickle.fire_point < 1000 + I_MIN

    def test_unicast_dis_answered_directly(self) -> None:
        """Test a unicast DIS gets a unicast DIO and leaves trickle alone."""
        world = FakeWorld()
        agent = _joined(world)
        agent.trickle.expire(100)
        agent.on_frame(_frame(8, 5, FrameKind.DIS, Dis()), 1000)
        kind, dst, dio = world.sent[-1]
        assert (kind, dst, dio.rank) == (FrameKind.DIO, 8, 512)
        assert agent.trickle.interval == 2 * I_MIN

    def test_dis_ignored_when_unjoined(self) -> None:
        """Test an unjoined node ignores DIS."""
        world = FakeWorld()
        agent = _agent(world)
        agent.handle_dis(0)
        assert not agent.trickle.running


class TestDownwardRoutes:
    """Tests for DAO handling."""

    def test_sink_stores_route(self) -> None:
        """Test the sink records the advertised target until it expires."""
        world = FakeWorld()
        sink = _agent(world, node_id=0, is_sink=True)
        sink.sink_init(0)
        sink.handle_dao(3, Dao(1, 7, 1), 100)
        assert sink.live_routes(100) == {7: 3}
        expiry = 100 + seconds_to_ticks(sink.cfg.lifetime)
        assert sink.live_routes(expiry + 1) == {}

    def test_router_forwards_dao_upward(self) -> None:
        """Test a joined router relays a child's DAO to its parent."""
        world = FakeWorld()
        agent = _joined(world)
        agent.handle_dao(8, Dao(1, 8, 1), 50)
        assert world.sent[-1][:2] == (FrameKind.DAO, 0)
        assert agent.live_routes(50) == {8: 8}

    def test_own_dao_failure_retries(self) -> None:
        """Test a failed DAO is rescheduled after the retry delay."""
        world = FakeWorld()
        agent = _joined(world)
        agent.send_dao(0)
        frame = Frame(5, 0, FrameKind.DAO, 44, world.sent[-1][2])
        agent.on_tx_result(frame, False, 3, 10)
        handle = agent._handles["dao"]
        assert world.kernel.queue._pending[handle.seq].fire_time == 10 + seconds_to_ticks(5.0)


class TestDataPlane:
    """Tests for sending, forwarding and delivering data."""

    def test_unjoined_send_counts_as_lost(self) -> None:
        """Test a packet generated before joining is counted but not sent."""
        world = FakeWorld()
        agent = _agent(world)
        agent.app_send(0)
        assert agent.app_sent == 1
        assert world.sent == []

    def test_joined_send_goes_to_parent(self) -> None:
        """Test a joined node sends data to its preferred parent."""
        world = FakeWorld()
        agent = _joined(world)
        agent.app_send(0)
        kind, dst, packet = world.sent[-1]
        assert (kind, dst, packet.source, packet.seq) == (FrameKind.DATA, 0, 5, 1)

    def test_sink_counts_hops_and_drops_duplicates(self) -> None:
        """Test a two-hop packet is delivered once with hop count 2."""
        world = FakeWorld()
        sink = _agent(world, node_id=0, is_sink=True)
        packet = DataPacket(7, 1, 0, hops=1)
        sink.on_frame(Frame(3, 0, FrameKind.DATA, 60, packet), 10)
        sink.on_frame(Frame(3, 0, FrameKind.DATA, 60, packet), 20)
        assert world.received == [(7, 2)]
        assert sink.delivered[7].count == 1
        assert sink.delivered[7].hop_sum == 2

    def test_router_forwards_data(self) -> None:
        """Test a joined router forwards with the hop count increased."""
        world = FakeWorld()
        agent = _joined(world)
        agent.on_frame(Frame(8, 5, FrameKind.DATA, 60, DataPacket(8, 4, 0)), 10)
        kind, dst, packet = world.sent[-1]
        assert (kind, dst, packet.hops) == (FrameKind.DATA, 0, 1)

    def test_repeated_failures_drop_parent(self) -> None:
        """Test three failed unicasts to the parent remove it."""
        world = FakeWorld()
        agent = _joined(world, parent_rank=512, ocp="of0")
        agent.handle_dio(3, _dio(512), 10)
        frame = Frame(5, 0, FrameKind.DATA, 60, DataPacket(5, 1, 0))
        for t in (20, 30, 40):
            agent.on_tx_result(frame, False, 3, t)
        assert 0 not in agent.parents
        assert agent.preferred_parent == 3
