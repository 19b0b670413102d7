"""Rich UI components for the llnsim CLI."""

from typing import Optional, Sequence

from rich.console import Console
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TaskID,
    TextColumn,
    TimeElapsedColumn,
)
from rich.table import Table

from llnsim.report import ComparisonReport, MetricsReport, format_value

# Consistent color theme
THEME = {
    "primary": "cyan",
    "success": "green",
    "warning": "yellow",
    "error": "red",
    "muted": "dim",
    "accent": "magenta",
    "info": "blue",
}

SUMMARY_METRICS = ("total_mJ", "avg_mW", "cpu_mJ", "lpm_mJ", "tx_mJ", "listen_mJ", "pdr", "avg_hops", "mean_etx")


class RunProgressDisplay:
    """Progress bar over repetitions (and sweep points).

    Shows: spinner, label, completed/total, aborted count, elapsed time.
    """

    def __init__(self, total: int, label: str = "repetitions", console: Optional[Console] = None):
        self.console = console or Console()
        self.total = total
        self.label = label
        self.aborted = 0
        self.progress = Progress(
            SpinnerColumn(),
            TextColumn(f"[bold {THEME['primary']}]{{task.description}}[/]"),
            BarColumn(),
            MofNCompleteColumn(),
            TextColumn("{task.fields[status]}"),
            TimeElapsedColumn(),
            console=self.console,
            transient=False,
        )
        self._task_id: Optional[TaskID] = None

    def _status(self) -> str:
        if not self.aborted:
            return ""
        return f"[{THEME['error']}]{self.aborted} aborted[/]"

    def start(self) -> "RunProgressDisplay":
        self.progress.start()
        self._task_id = self.progress.add_task(self.label, total=self.total, status="")
        return self

    def stop(self) -> None:
        self.progress.stop()

    def advance(self, ok: bool = True) -> None:
        if not ok:
            self.aborted += 1
        if self._task_id is not None:
            self.progress.update(self._task_id, advance=1, status=self._status())

    def __enter__(self) -> "RunProgressDisplay":
        return self.start()

    def __exit__(self, *args) -> None:
        self.stop()


def print_header(console: Console, title: str = "llnsim") -> None:
    """Print a styled header."""
    from rich.rule import Rule
    console.print()
    console.print(Rule(f"[bold {THEME['primary']}]{title}[/]", style=THEME["primary"]))


def print_success(console: Console, message: str) -> None:
    """Print a success message."""
    console.print(f"[{THEME['success']}]✓[/] {message}")


def print_error(console: Console, message: str) -> None:
    """Print an error message."""
    console.print(f"[{THEME['error']}]✗[/] {message}")


def print_warning(console: Console, message: str) -> None:
    """Print a warning message."""
    console.print(f"[{THEME['warning']}]⚠[/] {message}")


def print_info(console: Console, message: str) -> None:
    """Print an info message."""
    console.print(f"[{THEME['info']}]ℹ[/] {message}")


def report_table(reports: Sequence[MetricsReport], scope: str = "all") -> Table:
    """Mean ± sd across repetitions, one row per density."""
    table = Table(title=f"Per-node means ({scope})", header_style=f"bold {THEME['primary']}")
    table.add_column("nodes", justify="right")
    table.add_column("reps", justify="right")
    for metric in SUMMARY_METRICS:
        table.add_column(metric, justify="right")
    for report in reports:
        cells = []
        reps = 0
        for metric in SUMMARY_METRICS:
            agg = report.aggregate(metric, scope)
            reps = max(reps, agg.reps)
            if agg.mean is None:
                cells.append(f"[{THEME['muted']}]-[/]")
            elif agg.sd is None:
                cells.append(format_value(agg.mean))
            else:
                cells.append(f"{format_value(agg.mean)} ± {agg.sd:.3g}")
        density = "" if report.density is None else str(report.density)
        table.add_row(density, str(reps), *cells)
    return table


def comparison_table(comparison: ComparisonReport, metrics: Sequence[str] = SUMMARY_METRICS) -> Table:
    """Static against mobile per density; the total energy row is highlighted."""
    table = Table(title="Static vs mobile", header_style=f"bold {THEME['primary']}")
    for name in ("nodes", "metric", "static", "mobile", "delta", "delta %"):
        table.add_column(name, justify="right" if name != "metric" else "left")
    for row in comparison.rows:
        if row.metric not in metrics:
            continue
        pct = row.delta_pct
        if pct is None:
            pct_cell = f"[{THEME['muted']}]n/a[/]"
        else:
            color = THEME["error"] if pct > 0 else THEME["success"]
            pct_cell = f"[{color}]{pct:+.2f}%[/]"
        style = f"bold {THEME['accent']}" if row.metric == "total_mJ" else None
        table.add_row(
            str(row.density),
            row.metric,
            format_value(row.static),
            format_value(row.mobile),
            format_value(row.delta),
            pct_cell,
            style=style,
        )
    return table

