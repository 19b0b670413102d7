"""Write run results, comparisons, dumps and traces under an output directory."""

import json
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

from llnsim import __version__
from llnsim.config import config_to_dict
from llnsim.mobility.base import AreaBounds, MobilityTrace
from llnsim.mobility.trace_io import render_traces, write_traces
from llnsim.report import ComparisonReport, aggregate_csv
from llnsim.scenario import RunResultSet

logger = logging.getLogger("llnsim")

MANIFEST_VERSION = 1
NODES_CSV = "nodes.csv"
AGGREGATE_CSV = "aggregate.csv"
COMPARISON_CSV = "comparison.csv"
MANIFEST = "manifest.json"
TRACE_DIR = "traces"
LOG_FILES = {"events": "events.log", "radio": "radio.log", "control": "control.log"}


def _write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def build_manifest(results: RunResultSet) -> Dict[str, object]:
    return {
        "manifest_version": MANIFEST_VERSION,
        "llnsim_version": __version__,
        "seed": results.cfg.seed,
        "density": results.density,
        "config": config_to_dict(results.cfg),
        "repetitions": [
            {
                "rep": r.rep,
                "ok": r.ok,
                "aborted": r.aborted,
                "invariant": r.invariant,
                "events_dispatched": r.events_dispatched,
                "topology_changes": r.topology_changes,
                "dangling_chains": r.dangling_chains,
            }
            for r in results.results
        ],
    }


def write_trace_set(traces: Sequence[MobilityTrace], directory: Path, area: Optional[AreaBounds] = None) -> List[Path]:
    """One ``node_<id>.movements`` file per trace plus a combined ``all.movements``."""
    paths = [write_traces([t], directory / f"node_{t.node_id}.movements", area) for t in traces]
    paths.append(_write_text(directory / "all.movements", render_traces(traces, area)))
    return paths


def write_run(results: RunResultSet, out_dir: Path) -> Path:
    """Export one scenario (one density) into ``out_dir``.

    Traces of repetition 0 go directly under ``traces/``; later repetitions
    get ``traces/rep_<r>/``.
    """
    out_dir = Path(out_dir)
    report = results.report
    _write_text(out_dir / NODES_CSV, report.nodes_csv())
    _write_text(out_dir / AGGREGATE_CSV, aggregate_csv([report]))
    _write_text(out_dir / MANIFEST, json.dumps(build_manifest(results), indent=2, sort_keys=True) + "\n")

    for name, filename in LOG_FILES.items():
        if not getattr(results.cfg.logs, name):
            continue
        lines: List[str] = []
        for r in results.results:
            lines.extend(getattr(r.logs, name) or [])
        _write_text(out_dir / filename, "\n".join(lines) + "\n")

    for r in results.results:
        if r.traces is None:
            continue
        target = out_dir / TRACE_DIR if r.rep == 0 else out_dir / TRACE_DIR / f"rep_{r.rep}"
        write_trace_set(r.traces, target, results.cfg.area)
    logger.debug(f"wrote {out_dir}")
    return out_dir


def density_dir(out_dir: Path, density: int) -> Path:
    return Path(out_dir) / f"n{density}"


def write_sweep(sweep: Mapping[int, RunResultSet], out_dir: Path) -> Path:
    """Per-density run directories plus a combined ``aggregate.csv``."""
    out_dir = Path(out_dir)
    for density, results in sweep.items():
        write_run(results, density_dir(out_dir, density))
    _write_text(out_dir / AGGREGATE_CSV, aggregate_csv([sweep[d].report for d in sorted(sweep)]))
    return out_dir


def write_comparison(
    comparison: ComparisonReport,
    static: Mapping[int, RunResultSet],
    mobile: Mapping[int, RunResultSet],
    out_dir: Path,
) -> Path:
    out_dir = Path(out_dir)
    write_sweep(static, out_dir / "static")
    write_sweep(mobile, out_dir / "mobile")
    _write_text(out_dir / COMPARISON_CSV, comparison.csv())
    return out_dir
