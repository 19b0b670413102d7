"""Per-node metrics, cross-repetition aggregates and the arm comparison."""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from llnsim.errors import ComparisonError
from llnsim.power import PowerLedger, PowerModel, avg_power_mW, energy_mJ, pdr
from llnsim.simtime import SimTime

NODE_COLUMNS = (
    "rep", "node", "role", "cpu_mJ", "lpm_mJ", "tx_mJ", "listen_mJ", "total_mJ", "avg_mW",
    "sent", "delivered", "pdr", "avg_hops", "dio", "dao", "dis", "nd_msgs", "mean_etx",
)
METRICS = NODE_COLUMNS[3:]
SCOPES = ("all", "sink", "sender")
AGGREGATE_COLUMNS = ("density", "scope", "metric", "mean", "sd", "reps")
COMPARISON_COLUMNS = ("density", "metric", "static", "mobile", "delta", "delta_pct")


def format_value(value: object) -> str:
    """CSV cell: 6 significant digits for floats, empty when absent."""
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    lines = [",".join(columns)]
    lines.extend(",".join(format_value(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class NodeMetrics:
    """One row of ``nodes.csv``."""

    rep: int
    node: int
    role: str
    cpu_mJ: float
    lpm_mJ: float
    tx_mJ: float
    listen_mJ: float
    total_mJ: float
    avg_mW: float
    sent: int
    delivered: int
    pdr: float
    avg_hops: Optional[float]
    dio: int
    dao: int
    dis: int
    nd_msgs: int
    mean_etx: Optional[float]
    pdr_vacuous: bool = False
    hop_sum: int = 0

    def row(self) -> Tuple[object, ...]:
        return tuple(getattr(self, c) for c in NODE_COLUMNS)

    def value(self, metric: str) -> Optional[float]:
        v = getattr(self, metric)
        return None if v is None else float(v)


def node_metrics(
    rep: int,
    node: int,
    is_sink: bool,
    ledger: PowerLedger,
    power: PowerModel,
    elapsed: SimTime,
    sent: int,
    delivered: int,
    hop_sum: int,
    control: Mapping[str, int],
    mean_etx: Optional[float],
) -> NodeMetrics:
    """Derive a report row from a closed ledger and the node's counters."""
    energy = energy_mJ(ledger, power)
    return NodeMetrics(
        rep=rep,
        node=node,
        role="sink" if is_sink else "sender",
        cpu_mJ=energy.cpu,
        lpm_mJ=energy.lpm,
        tx_mJ=energy.tx,
        listen_mJ=energy.listen,
        total_mJ=energy.total,
        avg_mW=avg_power_mW(ledger, power, elapsed),
        sent=sent,
        delivered=delivered,
        pdr=pdr(sent, delivered),
        avg_hops=hop_sum / delivered if delivered else None,
        dio=control.get("DIO", 0),
        dao=control.get("DAO", 0),
        dis=control.get("DIS", 0),
        nd_msgs=sum(control.get(k, 0) for k in ("RS", "RA", "NS", "NA")),
        mean_etx=mean_etx,
        pdr_vacuous=sent == 0,
        hop_sum=hop_sum,
    )


@dataclass(frozen=True)
class Aggregate:
    scope: str
    metric: str
    mean: Optional[float]
    sd: Optional[float]
    reps: int


def mean_sd(values: Sequence[float]) -> Tuple[Optional[float], Optional[float]]:
    """Mean and sample standard deviation (n - 1); sd needs two values."""
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else None
    return mean, sd


@dataclass
class MetricsReport:
    """Rows of every completed repetition of one scenario."""

    rows: List[NodeMetrics] = field(default_factory=list)
    density: Optional[int] = None

    @property
    def repetitions(self) -> List[int]:
        return sorted({r.rep for r in self.rows})

    def scope_rows(self, scope: str, rep: Optional[int] = None) -> List[NodeMetrics]:
        return [
            r for r in self.rows
            if (scope == "all" or r.role == scope) and (rep is None or r.rep == rep)
        ]

    def rep_means(self, metric: str, scope: str = "all") -> Dict[int, float]:
        """Per repetition, the mean over the scope's nodes (absent values skipped).

        ``avg_hops`` is pooled instead: total hops over total delivered packets.
        """
        out: Dict[int, float] = {}
        for rep in self.repetitions:
            if metric == "avg_hops":
                rows = [r for r in self.scope_rows(scope, rep) if r.avg_hops is not None]
                if rows:
                    out[rep] = sum(r.hop_sum for r in rows) / sum(r.delivered for r in rows)
                continue
            values = [v for v in (r.value(metric) for r in self.scope_rows(scope, rep)) if v is not None]
            if values:
                out[rep] = float(np.mean(values))
        return out

    def aggregate(self, metric: str, scope: str = "all") -> Aggregate:
        per_rep = self.rep_means(metric, scope)
        mean, sd = mean_sd([per_rep[r] for r in sorted(per_rep)])
        return Aggregate(scope, metric, mean, sd, len(per_rep))

    def aggregates(self) -> List[Aggregate]:
        return [self.aggregate(m, s) for s in SCOPES for m in METRICS]

    def nodes_csv(self) -> str:
        return csv_text(NODE_COLUMNS, (r.row() for r in self.rows))

    def aggregate_rows(self) -> List[Tuple[object, ...]]:
        density = self.density if self.density is not None else ""
        return [(density, a.scope, a.metric, a.mean, a.sd, a.reps) for a in self.aggregates()]


def aggregate_csv(reports: Sequence[MetricsReport]) -> str:
    rows: List[Tuple[object, ...]] = []
    for report in reports:
        rows.extend(report.aggregate_rows())
    return csv_text(AGGREGATE_COLUMNS, rows)


def build_report(rows: Iterable[NodeMetrics], density: Optional[int] = None) -> MetricsReport:
    ordered = sorted(rows, key=lambda r: (r.rep, r.node))
    return MetricsReport(rows=ordered, density=density)


@dataclass(frozen=True)
class ComparisonRow:
    density: int
    metric: str
    static: Optional[float]
    mobile: Optional[float]

    @property
    def delta(self) -> Optional[float]:
        if self.static is None or self.mobile is None:
            return None
        return self.mobile - self.static

    @property
    def delta_pct(self) -> Optional[float]:
        """``(mobile - static) / static * 100``; absent when static is 0."""
        if self.delta is None or self.static == 0:
            return None
        return self.delta / self.static * 100.0

    def row(self) -> Tuple[object, ...]:
        return (self.density, self.metric, self.static, self.mobile, self.delta, self.delta_pct)


@dataclass
class ComparisonReport:
    """Static arm against mobile arm, per density and metric (scope ``all``)."""

    rows: List[ComparisonRow]
    static: Dict[int, MetricsReport]
    mobile: Dict[int, MetricsReport]

    def get(self, density: int, metric: str) -> ComparisonRow:
        for row in self.rows:
            if row.density == density and row.metric == metric:
                return row
        raise KeyError((density, metric))

    def paired(self, density: int, metric: str = "total_mJ") -> List[Tuple[float, float]]:
        """Matched-repetition ``(static, mobile)`` means over all nodes."""
        a = self.static[density].rep_means(metric)
        b = self.mobile[density].rep_means(metric)
        return [(a[r], b[r]) for r in sorted(set(a) & set(b))]

    def csv(self) -> str:
        return csv_text(COMPARISON_COLUMNS, (r.row() for r in self.rows))


def compare(static: Mapping[int, MetricsReport], mobile: Mapping[int, MetricsReport]) -> ComparisonReport:
    """Pair the two arms; densities and repetition sets must match.

    Deltas use the unrounded aggregate means, not the 6-digit CSV values.
    """
    if sorted(static) != sorted(mobile):
        raise ComparisonError(f"densities differ: static {sorted(static)} vs mobile {sorted(mobile)}")
    rows: List[ComparisonRow] = []
    for density in sorted(static):
        a, b = static[density], mobile[density]
        if len(a.repetitions) != len(b.repetitions):
            raise ComparisonError(
                f"density {density}: {len(a.repetitions)} static vs {len(b.repetitions)} mobile repetitions"
            )
        for metric in METRICS:
            rows.append(ComparisonRow(density, metric, a.aggregate(metric).mean, b.aggregate(metric).mean))
    return ComparisonReport(rows=rows, static=dict(static), mobile=dict(mobile))
