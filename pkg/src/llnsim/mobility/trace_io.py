"""BonnMotion-style ``.movements`` trace files.

One line per node in id order, holding repeated ``t x y`` triples with ``t``
in seconds. Lines starting with ``#`` are comments; two of them carry data
BonnMotion does not need: ``# area W H`` and ``# wrap <row> <i,j,...>``
for toroidal segments.
"""

from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence

from llnsim.errors import TraceFormatError
from llnsim.mobility.base import AreaBounds, MobilityTrace, Waypoint
from llnsim.simtime import TICKS_PER_SECOND, seconds_to_ticks


def format_number(value: float) -> str:
    """Shortest text that reads back as the same float, e.g. ``10.0``."""
    return repr(float(value))


def format_time(ticks: int) -> str:
    """Seconds for ``ticks``; parsing the text gives ``ticks`` back."""
    return format_number(ticks / TICKS_PER_SECOND)


def format_trace_line(trace: MobilityTrace) -> str:
    return " ".join(
        f"{format_time(w.t)} {format_number(w.x)} {format_number(w.y)}" for w in trace.waypoints
    )


def render_traces(traces: Sequence[MobilityTrace], area: Optional[AreaBounds] = None) -> str:
    lines: List[str] = []
    if area is not None:
        lines.append(f"# area {format_number(area.width)} {format_number(area.height)}")
    for row, trace in enumerate(traces):
        if trace.wrap_segments:
            indices = ",".join(str(i) for i in sorted(trace.wrap_segments))
            lines.append(f"# wrap {row} {indices}")
    lines.extend(format_trace_line(t) for t in traces)
    return "\n".join(lines) + "\n"


def write_traces(
    traces: Sequence[MobilityTrace],
    path: Path,
    area: Optional[AreaBounds] = None,
) -> Path:
    """Write traces (node order as given) to ``path``."""
    if area is None:
        area = next((t.area for t in traces if t.area is not None), None)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_traces(traces, area), encoding="utf-8", newline="\n")
    return path


def _parse_comment(
    text: str, lineno: int, wraps: Dict[int, FrozenSet[int]]
) -> Optional[AreaBounds]:
    parts = text[1:].split()
    if not parts:
        return None
    try:
        if parts[0] == "area" and len(parts) == 3:
            return AreaBounds(float(parts[1]), float(parts[2]))
        if parts[0] == "wrap" and len(parts) == 3:
            wraps[int(parts[1])] = frozenset(int(i) for i in parts[2].split(","))
    except ValueError as exc:
        raise TraceFormatError(f"bad '{parts[0]}' comment: {exc}", lineno) from exc
    return None


def _parse_waypoints(text: str, lineno: int) -> List[Waypoint]:
    fields = text.split()
    if len(fields) % 3 != 0:
        raise TraceFormatError(
            f"expected repeating 't x y' triples, got {len(fields)} numbers", lineno
        )
    try:
        numbers = [float(f) for f in fields]
    except ValueError as exc:
        raise TraceFormatError(f"not a number: {exc}", lineno) from exc
    waypoints: List[Waypoint] = []
    for k in range(0, len(numbers), 3):
        t, x, y = numbers[k:k + 3]
        ticks = seconds_to_ticks(t)
        if waypoints and ticks <= waypoints[-1].t:
            raise TraceFormatError(
                f"waypoint times not increasing ({format_time(waypoints[-1].t)} -> {t})", lineno
            )
        waypoints.append(Waypoint(ticks, x, y))
    if waypoints[0].t != 0:
        raise TraceFormatError(f"first waypoint at t={numbers[0]}, expected 0", lineno)
    return waypoints


def parse_trace_lines(lines: Iterable[str]) -> List[MobilityTrace]:
    """Parse trace text; node ids follow line order."""
    area: Optional[AreaBounds] = None
    wraps: Dict[int, FrozenSet[int]] = {}
    rows = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if text.startswith("#"):
            area = _parse_comment(text, lineno, wraps) or area
            continue
        rows.append((lineno, _parse_waypoints(text, lineno)))
    traces = []
    for node_id, (lineno, waypoints) in enumerate(rows):
        wrap = wraps.get(node_id, frozenset())
        if wrap and area is None:
            raise TraceFormatError(f"node {node_id} has wrap segments but no '# area' line", lineno)
        try:
            traces.append(MobilityTrace(node_id, waypoints, wrap, area if wrap else None))
        except ValueError as exc:
            raise TraceFormatError(str(exc), lineno) from exc
    return traces


def parse_traces(path: Path) -> List[MobilityTrace]:
    """Read a trace file written by :func:`write_traces` or BonnMotion."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TraceFormatError(f"cannot read {path}: {exc}") from exc
    return parse_trace_lines(text.splitlines())
