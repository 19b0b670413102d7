"""Repetition orchestration: placement, traces, runs, sweeps and arms."""

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

from llnsim import ENV_THREADS
from llnsim.config import ScenarioConfig, config_from_dict, config_to_dict, static_arm, with_overrides
from llnsim.debug import log_repetition
from llnsim.errors import ConfigError, InvariantViolation, SimulationAborted
from llnsim.mobility.base import MobilityTrace, Position, static_trace
from llnsim.report import ComparisonReport, MetricsReport, NodeMetrics, build_report, compare, node_metrics
from llnsim.rng import RngStreams
from llnsim.simtime import seconds_to_ticks
from llnsim.world import RunLogs, WorldState, log_header

logger = logging.getLogger("llnsim")

ProgressFn = Callable[["RepetitionResult"], None]


@dataclass
class RepetitionResult:
    rep: int
    n_nodes: int
    rows: List[NodeMetrics] = field(default_factory=list)
    logs: RunLogs = field(default_factory=RunLogs)
    traces: Optional[List[MobilityTrace]] = None
    aborted: Optional[str] = None
    invariant: Optional[str] = None
    events_dispatched: int = 0
    wall_seconds: float = 0.0
    topology_changes: int = 0
    dangling_chains: int = 0
    control_totals: Dict[str, int] = field(default_factory=dict)
    radio_control_frames: int = 0

    @property
    def ok(self) -> bool:
        return self.aborted is None


@dataclass
class RunResultSet:
    """All repetitions of one scenario at one density."""

    cfg: ScenarioConfig
    results: List[RepetitionResult]

    @property
    def density(self) -> int:
        return self.cfg.n_nodes

    @property
    def aborted(self) -> List[RepetitionResult]:
        return [r for r in self.results if not r.ok]

    @property
    def report(self) -> MetricsReport:
        rows = [row for r in self.results if r.ok for row in r.rows]
        return build_report(rows, density=self.density)


def place_nodes(cfg: ScenarioConfig, rep: int) -> List[Position]:
    """Configured positions, or uniform draws from the repetition's placement stream."""
    if cfg.positions is not None:
        return [(float(x), float(y)) for x, y in cfg.positions]
    rng = RngStreams(cfg.seed, rep).get("placement")
    return [cfg.area.uniform_point(rng) for _ in range(cfg.n_nodes)]


def make_traces(cfg: ScenarioConfig, rep: int, placements: Sequence[Position]) -> Optional[List[MobilityTrace]]:
    """Per-node traces for a mobile arm; None when the arm is static."""
    model = cfg.mobility.build()
    if model is None:
        return None
    streams = RngStreams(cfg.seed, rep)
    duration = seconds_to_ticks(cfg.duration)
    sinks = set(cfg.sink_ids)
    traces = []
    for i, start in enumerate(placements):
        if cfg.mobility.applies_to == "senders-only" and i in sinks:
            traces.append(static_trace(i, start, duration))
        else:
            traces.append(model.generate(cfg.area, duration, streams.node("mobility", i), start=start, node_id=i))
    return traces


def collect_metrics(world: WorldState) -> List[NodeMetrics]:
    rows = []
    for node in world.nodes:
        agent = node.agent
        delivered, hop_sum = world.delivered_from(node.node_id)
        control = {kind.value: n for kind, n in world.control_sent[node.node_id].items()}
        rows.append(
            node_metrics(
                rep=world.rep,
                node=node.node_id,
                is_sink=node.is_sink,
                ledger=node.ledger,
                power=world.cfg.power,
                elapsed=world.elapsed,
                sent=agent.app_sent,
                delivered=delivered,
                hop_sum=hop_sum,
                control=control,
                mean_etx=agent.etx.mean(),
            )
        )
    return rows


def run_repetition(cfg: ScenarioConfig, rep: int) -> RepetitionResult:
    """Run one repetition. Errors abort this repetition only."""
    placements = place_nodes(cfg, rep)
    traces = make_traces(cfg, rep, placements)
    result = RepetitionResult(rep=rep, n_nodes=cfg.n_nodes, traces=traces)
    started = time.perf_counter()
    world = WorldState(cfg, rep, placements, traces)
    for buffer in (world.logs.events, world.logs.radio, world.logs.control):
        if buffer is not None:
            buffer.append(log_header(rep, cfg.n_nodes, cfg.sink_ids, world.elapsed))
    result.logs = world.logs
    try:
        stats = world.run()
    except (SimulationAborted, InvariantViolation) as exc:
        result.aborted = str(exc)
        result.invariant = getattr(exc, "invariant", None)
        result.events_dispatched = world.kernel.dispatched
        result.wall_seconds = time.perf_counter() - started
        logger.error(f"repetition {rep} ({cfg.n_nodes} nodes) aborted: {exc}")
        return result
    result.rows = collect_metrics(world)
    result.events_dispatched = stats.events_dispatched
    result.wall_seconds = time.perf_counter() - started
    result.topology_changes = world.topology_changes
    result.dangling_chains = world.dangling_chains
    result.control_totals = world.control_totals()
    result.radio_control_frames = world.radio_control_frames()
    log_repetition(
        rep,
        cfg.n_nodes,
        {
            "events": stats.events_dispatched,
            "wall_s": round(result.wall_seconds, 3),
            "topology_changes": world.topology_changes,
            "dangling_chains": world.dangling_chains,
        },
    )
    return result


def _repetition_worker(args: Dict[str, Any]) -> RepetitionResult:
    """Process-pool entry point; the config travels as its dict form."""
    return run_repetition(config_from_dict(args["config"]), args["rep"])


def resolve_workers(threads: Optional[int] = None) -> int:
    """Worker count from the argument or ``LLNSIM_THREADS`` (0 = serial)."""
    if threads is None:
        raw = os.environ.get(ENV_THREADS, "").strip()
        if not raw:
            return 0
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{ENV_THREADS} must be an integer, got {raw!r}") from exc
    if threads < 0:
        raise ConfigError(f"{ENV_THREADS} must be >= 0, got {threads}")
    return threads


def run_scenario(
    cfg: ScenarioConfig,
    threads: Optional[int] = None,
    on_result: Optional[ProgressFn] = None,
) -> RunResultSet:
    """Run every repetition; results come back ordered by repetition."""
    workers = resolve_workers(threads)
    results: List[RepetitionResult] = []
    if workers <= 1 or cfg.repetitions == 1:
        for rep in range(cfg.repetitions):
            result = run_repetition(cfg, rep)
            results.append(result)
            if on_result:
                on_result(result)
    else:
        payload = config_to_dict(cfg)
        with ProcessPoolExecutor(max_workers=min(workers, cfg.repetitions)) as pool:
            futures = [
                pool.submit(_repetition_worker, {"config": payload, "rep": rep})
                for rep in range(cfg.repetitions)
            ]
            for future in as_completed(futures):
                result = future.result()
                results.append(result)
                if on_result:
                    on_result(result)
    results.sort(key=lambda r: r.rep)
    return RunResultSet(cfg=cfg, results=results)


def run_sweep(
    cfg: ScenarioConfig,
    densities: Sequence[int],
    threads: Optional[int] = None,
    on_result: Optional[ProgressFn] = None,
) -> Dict[int, RunResultSet]:
    """One scenario per density under the same base seed."""
    if not densities:
        raise ConfigError("density sweep needs at least one density")
    out: Dict[int, RunResultSet] = {}
    for density in densities:
        point = with_overrides(cfg, n_nodes=density)
        logger.info(f"density {density}: {point.repetitions} repetition(s)")
        out[density] = run_scenario(point, threads=threads, on_result=on_result)
    return out


@dataclass
class ArmResults:
    static: Dict[int, RunResultSet]
    mobile: Dict[int, RunResultSet]
    comparison: ComparisonReport

    @property
    def aborted(self) -> List[RepetitionResult]:
        sets = list(self.static.values()) + list(self.mobile.values())
        return [r for s in sets for r in s.aborted]


def run_arms(
    cfg: ScenarioConfig,
    densities: Sequence[int],
    threads: Optional[int] = None,
    on_result: Optional[ProgressFn] = None,
) -> ArmResults:
    """Static arm and the configured (mobile) arm over matched seeds."""
    static = run_sweep(static_arm(cfg), densities, threads, on_result)
    mobile = run_sweep(cfg, densities, threads, on_result)
    comparison = compare(
        {d: s.report for d, s in static.items()},
        {d: s.report for d, s in mobile.items()},
    )
    return ArmResults(static=static, mobile=mobile, comparison=comparison)
