"""Rebuild per-node metrics from the event, radio and control dumps."""

import json
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import DefaultDict, Dict, Iterable, Iterator, List, Optional, Tuple

from llnsim.config import ScenarioConfig, config_from_dict
from llnsim.errors import ConfigError
from llnsim.events import WORLD, EventKind
from llnsim.export import LOG_FILES, MANIFEST, NODES_CSV
from llnsim.power import PowerLedger
from llnsim.report import NodeMetrics, build_report, node_metrics
from llnsim.rpl.etx import EtxEstimator
from llnsim.world import event_cpu_ticks

HEADER = re.compile(r"^# rep (\d+) nodes=(\d+) sinks=([\d,]*) elapsed=(\d+)$")
CONTROL_NAMES = ("DIO", "DAO", "DIS", "RS", "RA", "NS", "NA")


@dataclass
class RepSection:
    rep: int
    n_nodes: int
    sinks: List[int]
    elapsed: int
    lines: List[str] = field(default_factory=list)


def split_sections(lines: Iterable[str]) -> Dict[int, RepSection]:
    """Group dump lines under their ``# rep`` header."""
    sections: Dict[int, RepSection] = {}
    current: Optional[RepSection] = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line:
            continue
        match = HEADER.match(line)
        if match:
            rep, n, sinks, elapsed = match.groups()
            current = RepSection(int(rep), int(n), [int(s) for s in sinks.split(",") if s], int(elapsed))
            sections[current.rep] = current
            continue
        if current is None:
            raise ConfigError(f"dump line {lineno} precedes any '# rep' header")
        current.lines.append(line)
    return sections


def cpu_from_events(lines: Iterable[str], ctx: ScenarioConfig) -> Counter:
    cpu: Counter = Counter()
    for line in lines:
        _, _, target, label = line.split("\t")
        node = WORLD if target == "world" else int(target)
        kind = EventKind(label.split(":", 1)[0])
        if node != WORLD:
            cpu[node] += event_cpu_ticks(kind, node, ctx.cpu_cost)
    return cpu


def radio_from_intervals(lines: Iterable[str]) -> Dict[int, Tuple[int, int]]:
    """Per node ``(tx_ticks, listen_ticks)``."""
    totals: DefaultDict[int, List[int]] = defaultdict(lambda: [0, 0])
    for line in lines:
        start, end, node, state = line.split("\t")
        span = int(end) - int(start)
        if state == "transmit":
            totals[int(node)][0] += span
        elif state == "listen":
            totals[int(node)][1] += span
    return {n: (v[0], v[1]) for n, v in totals.items()}


@dataclass
class ControlReplay:
    control: DefaultDict[int, Counter] = field(default_factory=lambda: defaultdict(Counter))
    sent: Counter = field(default_factory=Counter)
    delivered: Counter = field(default_factory=Counter)
    hops: Counter = field(default_factory=Counter)
    etx: Dict[int, EtxEstimator] = field(default_factory=dict)


def replay_control(lines: Iterable[str], ctx: ScenarioConfig) -> ControlReplay:
    out = ControlReplay()
    rpl = ctx.rpl
    for line in lines:
        cols = line.split("\t")
        node, kind, direction = int(cols[1]), cols[2], cols[3]
        if kind in CONTROL_NAMES and direction == "sent":
            out.control[node][kind] += 1
        elif kind == "DATA" and direction == "sent":
            out.sent[node] += 1
        elif kind == "DATA" and direction == "recv":
            source = int(cols[4])
            out.delivered[source] += 1
            out.hops[source] += int(cols[5])
        elif kind == "TXRESULT":
            attempts = int(cols[5])
            est = out.etx.setdefault(node, EtxEstimator(rpl.etx_alpha, rpl.etx_initial, rpl.etx_noack_penalty))
            est.update(int(cols[4]), attempts, attempts > 0)
    return out


def rebuild_rows(
    ctx: ScenarioConfig,
    events: RepSection,
    radio: RepSection,
    control: RepSection,
) -> List[NodeMetrics]:
    cpu = cpu_from_events(events.lines, ctx)
    air = radio_from_intervals(radio.lines)
    ctl = replay_control(control.lines, ctx)
    rows = []
    for node in range(events.n_nodes):
        ledger = PowerLedger()
        ledger.add_cpu(cpu.get(node, 0))
        tx, listen = air.get(node, (0, 0))
        ledger.add_tx(tx)
        ledger.add_listen(listen)
        ledger.finalize(events.elapsed)
        est = ctl.etx.get(node)
        rows.append(
            node_metrics(
                rep=events.rep,
                node=node,
                is_sink=node in events.sinks,
                ledger=ledger,
                power=ctx.power,
                elapsed=events.elapsed,
                sent=ctl.sent.get(node, 0),
                delivered=ctl.delivered.get(node, 0),
                hop_sum=ctl.hops.get(node, 0),
                control=dict(ctl.control.get(node, {})),
                mean_etx=est.mean() if est else None,
            )
        )
    return rows


@dataclass
class ReplayOutcome:
    rebuilt: str
    stored: str

    @property
    def matches(self) -> bool:
        return self.rebuilt == self.stored

    def differences(self, limit: int = 10) -> Iterator[Tuple[str, str]]:
        shown = 0
        for a, b in zip(self.stored.splitlines(), self.rebuilt.splitlines()):
            if a != b and shown < limit:
                shown += 1
                yield a, b


def replay_dir(run_dir: Path) -> ReplayOutcome:
    """Recompute ``nodes.csv`` of an exported run from its dumps."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / MANIFEST
    if not manifest_path.is_file():
        raise ConfigError(f"no {MANIFEST} in {run_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    cfg = config_from_dict(manifest)
    dumps = {}
    for name, filename in LOG_FILES.items():
        path = run_dir / filename
        if not path.is_file():
            raise ConfigError(f"replay needs {filename}; re-run with --log-events --log-radio --log-control")
        dumps[name] = split_sections(path.read_text(encoding="utf-8").splitlines())
    completed = {r["rep"] for r in manifest.get("repetitions", []) if r.get("ok")}
    rows: List[NodeMetrics] = []
    for rep in sorted(completed):
        try:
            sections = [dumps[name][rep] for name in ("events", "radio", "control")]
        except KeyError as exc:
            raise ConfigError(f"repetition {rep} missing from the dumps") from exc
        rows.extend(rebuild_rows(cfg, *sections))
    rebuilt = build_report(rows, density=cfg.n_nodes).nodes_csv()
    stored = (run_dir / NODES_CSV).read_text(encoding="utf-8")
    return ReplayOutcome(rebuilt=rebuilt, stored=stored)
