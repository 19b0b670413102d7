"""Integration tests for world.py and scenario.py - full repetitions."""

import math
from collections import defaultdict, deque
from typing import Dict, List, Sequence, Tuple

import pytest

from llnsim.config import LogFlags, MobilitySettings, RadioSettings, ScenarioConfig, config_from_dict
from llnsim.errors import ConfigError, InvariantViolation
from llnsim.events import WORLD, EventKind
from llnsim.mobility import MODELS
from llnsim.mobility.base import AreaBounds
from llnsim.power import PowerModel
from llnsim.radio.base import RdcConfig
from llnsim.radio.medium import UdgmConfig
from llnsim.rng import rng_stream
from llnsim.rpl import ROOT_RANK, ParentEntry, RplConfig
from llnsim.scenario import (
    make_traces,
    place_nodes,
    resolve_workers,
    run_repetition,
    run_scenario,
    run_sweep,
)
from llnsim.simtime import seconds_to_ticks
from llnsim.world import WorldState, event_cpu_ticks

LINE = [(0.0, 0.0), (80.0, 0.0), (160.0, 0.0)]


def line_config(**overrides) -> ScenarioConfig:
    """Sink, relay and leaf 80 m apart; every node hears every transmission."""
    fields = dict(
        n_nodes=3,
        duration=600.0,
        repetitions=1,
        data_start=120.0,
        data_period=30.0,
        positions=LINE,
        radio=RadioSettings(
            udgm=UdgmConfig(tx_range=100.0, interference_range=200.0),
            rdc=RdcConfig(mode="always-on"),
        ),
        rpl=RplConfig(ocp="of0"),
        logs=LogFlags(control=True),
    )
    fields.update(overrides)
    cfg = ScenarioConfig(**fields)
    cfg.validate()
    return cfg


def control_lines(lines: List[str]) -> List[List[str]]:
    return [line.split("\t") for line in lines if not line.startswith("#")]


def hop_distances(positions: Sequence[Tuple[float, float]], tx_range: float, sink: int = 0) -> Dict[int, int]:
    """Breadth-first hop counts from the sink over the unit-disk graph."""
    dist = {sink: 0}
    frontier = deque([sink])
    while frontier:
        u = frontier.popleft()
        for v, pos in enumerate(positions):
            if v not in dist and math.dist(positions[u], pos) <= tx_range:
                dist[v] = dist[u] + 1
                frontier.append(v)
    return dist


def undelivered(world: WorldState, settle: float) -> Tuple[int, List[Tuple[int, int]]]:
    """Packets handed to a parent at least ``settle`` seconds before the end.

    Returns how many there were and the ``(source, seq)`` of those the sink
    never received. The k-th data send of a node carries sequence number k.
    """
    cutoff = world.elapsed - seconds_to_ticks(settle)
    seen = world.nodes[0].agent._seen
    seqs: Dict[int, int] = defaultdict(int)
    handed = 0
    missing = []
    for cols in control_lines(world.logs.control):
        if cols[2] != "DATA" or cols[3] != "sent":
            continue
        node = int(cols[1])
        seqs[node] += 1
        if cols[4] == "-" or int(cols[0]) > cutoff:
            continue
        handed += 1
        if (node, seqs[node]) not in seen:
            missing.append((node, seqs[node]))
    return handed, missing


def random_config(
    seed: int, mode: str, n_nodes: int = 10, side: float = 240.0, duration: float = 900.0
) -> ScenarioConfig:
    """Uniformly placed static network running OF0 under ``mode``."""
    cfg = ScenarioConfig(
        n_nodes=n_nodes,
        seed=seed,
        duration=duration,
        repetitions=1,
        data_start=300.0,
        data_period=30.0,
        area=AreaBounds(side, side),
        radio=RadioSettings(rdc=RdcConfig(mode=mode)),
        rpl=RplConfig(ocp="of0"),
        logs=LogFlags(control=True),
    )
    cfg.validate()
    return cfg


def connected_seeds(count: int) -> List[int]:
    """First seeds whose random placement connects every node to the sink."""
    seeds = []
    for seed in range(500):
        cfg = random_config(seed, "always-on")
        if len(hop_distances(place_nodes(cfg, 0), cfg.radio.udgm.tx_range)) == cfg.n_nodes:
            seeds.append(seed)
            if len(seeds) == count:
                break
    assert len(seeds) == count
    return seeds


class TestLineTopology:
    """Tests on a three-node line with always-on radios."""

    @pytest.fixture(scope="class")
    def world(self) -> WorldState:
        cfg = line_config()
        world = WorldState(cfg, 0, place_nodes(cfg, 0))
        world.run()
        return world

    def test_everyone_joins_with_expected_ranks(self, world: WorldState) -> None:
        """Test the relay sits at rank 512 and the leaf at 768."""
        agents = [n.agent for n in world.nodes]
        assert agents[0].rank == 256
        assert (agents[1].preferred_parent, agents[1].rank) == (0, 512)
        assert (agents[2].preferred_parent, agents[2].rank) == (1, 768)

    def test_hop_counts(self, world: WorldState) -> None:
        """Test the relay is one hop from the sink and the leaf two."""
        hops = {}
        for cols in control_lines(world.logs.control):
            if cols[2] == "DATA" and cols[3] == "recv":
                hops.setdefault(int(cols[4]), set()).add(int(cols[5]))
        assert hops == {1: {1}, 2: {2}}

    def test_delivery(self, world: WorldState) -> None:
        """Test every packet handed to a parent reaches the sink."""
        handed, missing = undelivered(world, settle=30.0)
        assert missing == []
        assert handed >= 2 * 15
        for source in (1, 2):
            delivered, _ = world.delivered_from(source)
            assert delivered >= 15

    def test_downward_routes(self, world: WorldState) -> None:
        """Test the sink reaches both nodes through the relay."""
        assert world.nodes[0].agent.live_routes(world.elapsed) == {1: 1, 2: 1}

    def test_ledger_partition(self, world: WorldState) -> None:
        """Test MCU and radio time each add up to the run length."""
        for node in world.nodes:
            ledger = node.ledger
            assert ledger.cpu_ticks + ledger.lpm_ticks == world.elapsed
            assert ledger.tx_ticks + ledger.listen_ticks + ledger.off_ticks == world.elapsed
            assert ledger.off_ticks == 0

    def test_control_messages_conserved(self, world: WorldState) -> None:
        """Test every control message counted as sent went on air once."""
        assert world.radio_control_frames() == sum(world.control_totals().values())
        assert world.control_totals()["DIO"] > 0

    def test_no_mobility_no_topology_changes(self, world: WorldState) -> None:
        """Test a static run never resamples positions."""
        assert not world.mobile
        assert world.topology_changes == 0


class TestDutyCycledRuns:
    """Tests joining under the duty-cycled radio layers."""

    @pytest.mark.parametrize("mode", ["lpl", "lpt"])
    def test_pair_joins_and_delivers(self, mode: str) -> None:
        """Test two nodes in range join and deliver data."""
        cfg = line_config(
            n_nodes=2,
            positions=LINE[:2],
            duration=300.0,
            radio=RadioSettings(rdc=RdcConfig(mode=mode)),
        )
        world = WorldState(cfg, 0, place_nodes(cfg, 0))
        world.run()
        assert world.nodes[1].agent.preferred_parent == 0
        assert world.delivered_from(1)[0] > 0
        ledger = world.nodes[1].ledger
        assert ledger.off_ticks > ledger.listen_ticks


class TestStaticDelivery:
    """Random connected static networks against breadth-first hop counts."""

    @pytest.fixture(scope="class")
    def seeds(self) -> List[int]:
        return connected_seeds(2)

    @pytest.mark.parametrize("mode", ["lpl", "always-on"])
    def test_every_handed_packet_delivered_over_shortest_paths(self, mode: str, seeds: List[int]) -> None:
        """Test nothing is lost and ranks and hop counts follow the unit-disk distances."""
        for seed in seeds:
            cfg = random_config(seed, mode)
            placements = place_nodes(cfg, 0)
            world = WorldState(cfg, 0, placements)
            world.run()
            handed, missing = undelivered(world, settle=60.0)
            assert missing == [], (seed, mode)
            assert handed >= 10 * (cfg.n_nodes - 1)
            distances = hop_distances(placements, cfg.radio.udgm.tx_range)
            last_hops = {}
            for cols in control_lines(world.logs.control):
                if cols[2] == "DATA" and cols[3] == "recv":
                    last_hops[int(cols[4])] = int(cols[5])
            for node in world.nodes[1:]:
                assert node.agent.rank == ROOT_RANK * (distances[node.node_id] + 1)
                assert last_hops[node.node_id] == distances[node.node_id]

    @pytest.mark.slow
    @pytest.mark.parametrize("mode", ["lpl", "always-on"])
    def test_twenty_nodes_half_hour(self, mode: str) -> None:
        """Test a 20-node network over 30 minutes delivers every handed packet."""
        cfg = random_config(0, mode, n_nodes=20, side=200.0, duration=1800.0)
        world = WorldState(cfg, 0, place_nodes(cfg, 0))
        world.run()
        handed, missing = undelivered(world, settle=60.0)
        assert missing == []
        assert handed > 0


class TestInvariantChecks:
    """Tests for check_invariants on hand-built DODAG states."""

    def test_chain_to_detached_node_counted(self) -> None:
        """Test a child still pointing at a detached parent is counted, not raised."""
        cfg = line_config()
        world = WorldState(cfg, 0, place_nodes(cfg, 0))
        leaf = world.nodes[2].agent
        leaf.joined, leaf.preferred_parent, leaf.rank = True, 1, 768
        leaf.parents[1] = ParentEntry(1, 512, 0, 1, 0)
        world.check_invariants()
        assert world.dangling_chains == 1

    def test_cycle_raises(self) -> None:
        """Test two nodes choosing each other is reported."""
        cfg = line_config()
        world = WorldState(cfg, 0, place_nodes(cfg, 0))
        for node, parent in ((1, 2), (2, 1)):
            agent = world.nodes[node].agent
            agent.joined, agent.preferred_parent, agent.rank = True, parent, 768
            agent.parents[parent] = ParentEntry(parent, 512, 0, 1, 0)
        with pytest.raises(InvariantViolation) as err:
            world.check_invariants()
        assert err.value.invariant == "dodag-acyclic"


class TestRunRepetition:
    """Tests for run_repetition and run_scenario."""

    def test_rows_per_node(self) -> None:
        """Test one metrics row per node with the sink first."""
        result = run_repetition(line_config(duration=300.0), 0)
        assert result.ok
        assert [r.node for r in result.rows] == [0, 1, 2]
        assert [r.role for r in result.rows] == ["sink", "sender", "sender"]
        assert result.rows[0].sent == 0
        assert result.rows[0].pdr_vacuous

    def test_same_seed_same_event_log(self) -> None:
        """Test identical inputs dispatch identical events."""
        cfg = line_config(duration=200.0, logs=LogFlags(events=True))
        first = run_repetition(cfg, 0).logs.events
        second = run_repetition(cfg, 0).logs.events
        assert first == second
        assert first[0].startswith("# rep 0 nodes=3 sinks=0 elapsed=")

    def test_mobile_repetition_completes(self) -> None:
        """Test a random-waypoint run finishes without violations."""
        cfg = config_from_dict(
            {
                "n_nodes": 5,
                "duration": 120.0,
                "repetitions": 1,
                "data_start": 30.0,
                "mobility": {"model": "rwp", "params": {"v_min": 1.0, "v_max": 3.0, "t_pause": 5.0}},
            }
        )
        result = run_repetition(cfg, 0)
        assert result.ok, result.aborted
        assert len(result.rows) == 5
        assert result.traces is not None
        assert result.radio_control_frames == sum(result.control_totals.values())

    def test_repetitions_ordered(self) -> None:
        """Test run_scenario returns repetitions in order."""
        results = run_scenario(line_config(duration=60.0, data_start=10.0, repetitions=3), threads=0)
        assert [r.rep for r in results.results] == [0, 1, 2]
        assert results.density == 3
        assert results.report.repetitions == [0, 1, 2]

    def test_sweep_densities(self) -> None:
        """Test a sweep runs each density with random placement."""
        cfg = config_from_dict({"duration": 30.0, "repetitions": 1, "data_start": 5.0})
        sweep = run_sweep(cfg, [3, 4], threads=0)
        assert sorted(sweep) == [3, 4]
        assert len(sweep[4].results[0].rows) == 4

    def test_empty_sweep_rejected(self) -> None:
        """Test a sweep needs densities."""
        with pytest.raises(ConfigError):
            run_sweep(line_config(), [])


class TestPlacementAndTraces:
    """Tests for place_nodes and make_traces."""

    def test_configured_positions(self) -> None:
        """Test explicit positions are used as given."""
        assert place_nodes(line_config(), 0) == LINE

    def test_random_placement_reproducible(self) -> None:
        """Test placement depends only on seed and repetition."""
        cfg = ScenarioConfig(n_nodes=10, seed=3)
        assert place_nodes(cfg, 1) == place_nodes(cfg, 1)
        assert place_nodes(cfg, 1) != place_nodes(cfg, 2)
        assert all(cfg.area.contains(p) for p in place_nodes(cfg, 1))

    def test_static_arm_has_no_traces(self) -> None:
        """Test a static arm produces no traces."""
        cfg = ScenarioConfig(n_nodes=4)
        assert make_traces(cfg, 0, place_nodes(cfg, 0)) is None

    def test_senders_only_keeps_sinks_still(self) -> None:
        """Test sinks get a static trace when only senders move."""
        cfg = ScenarioConfig(n_nodes=4, mobility=MobilitySettings(model="rwp", applies_to="senders-only"))
        placements = place_nodes(cfg, 0)
        traces = make_traces(cfg, 0, placements)
        assert traces[0].is_static()
        assert not traces[1].is_static()
        assert traces[1].waypoints[0].x == pytest.approx(placements[1][0])


class TestHelpers:
    """Tests for small world and scenario helpers."""

    def test_event_cpu_cost(self) -> None:
        """Test message events cost 1 ms and timers 0.2 ms of CPU."""
        cost = ScenarioConfig().cpu_cost
        assert event_cpu_ticks(EventKind.FRAME_ARRIVAL, 1, cost) == 33
        assert event_cpu_ticks(EventKind.TIMER_EXPIRY, 1, cost) == 7
        assert event_cpu_ticks(EventKind.WAYPOINT_UPDATE, WORLD, cost) == 0

    def test_threads_from_environment(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test the worker count falls back to the environment."""
        monkeypatch.setenv("LLNSIM_THREADS", "4")
        assert resolve_workers(None) == 4
        assert resolve_workers(2) == 2
        monkeypatch.setenv("LLNSIM_THREADS", "many")
        with pytest.raises(ConfigError):
            resolve_workers(None)

    def test_power_model_defaults(self) -> None:
        """Test the default currents order listen > CPU > LPM."""
        model = PowerModel()
        assert model.i_listen > model.i_cpu > model.i_lpm


class TestLedgerFuzz:
    """Randomized ten-minute runs must keep every ledger partitioned."""

    @pytest.mark.parametrize("seed", range(4))
    def test_random_run_partitions_every_ledger(self, seed: int) -> None:
        """Test a random radio mode and mobility model close every ledger at the run length."""
        rng = rng_stream(seed, "test")
        mode = ["always-on", "lpl", "lpt"][int(rng.integers(3))]
        model = sorted(MODELS)[int(rng.integers(len(MODELS)))]
        cfg = ScenarioConfig(
            n_nodes=int(rng.integers(4, 9)),
            seed=seed,
            duration=600.0,
            repetitions=1,
            data_start=float(rng.uniform(10.0, 120.0)),
            data_period=float(rng.uniform(5.0, 60.0)),
            area=AreaBounds(200.0, 200.0),
            mobility=MobilitySettings(model=model),
            radio=RadioSettings(rdc=RdcConfig(mode=mode)),
        )
        cfg.validate()
        placements = place_nodes(cfg, 0)
        world = WorldState(cfg, 0, placements, make_traces(cfg, 0, placements))
        world.run()
        assert world.elapsed == seconds_to_ticks(600.0)
        for node in world.nodes:
            ledger = node.ledger
            assert ledger.finalized
            assert ledger.cpu_ticks + ledger.lpm_ticks == world.elapsed, (mode, model)
            assert ledger.tx_ticks + ledger.listen_ticks + ledger.off_ticks == world.elapsed, (mode, model)
            assert min(ledger.cpu_ticks, ledger.lpm_ticks, ledger.tx_ticks, ledger.listen_ticks, ledger.off_ticks) >= 0
