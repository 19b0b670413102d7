"""CLI entry point for llnsim."""

import sys
from pathlib import Path
from typing import Callable, List, Optional

import click
from rich.console import Console
from rich.panel import Panel
from rich.traceback import install as install_rich_traceback

from llnsim import ENV_THREADS, __version__
from llnsim.config import ScenarioConfig, config_from_dict, load_config, with_logs, with_overrides
from llnsim.debug import setup_logging
from llnsim.errors import ComparisonError, ConfigError
from llnsim.export import write_comparison, write_run, write_sweep, write_trace_set
from llnsim.mobility.metrics import mobility_metric
from llnsim.replay import replay_dir
from llnsim.scenario import (
    RepetitionResult,
    make_traces,
    place_nodes,
    resolve_workers,
    run_arms,
    run_scenario,
    run_sweep,
)
from llnsim.simtime import seconds_to_ticks
from llnsim.ui import (
    THEME,
    RunProgressDisplay,
    comparison_table,
    print_error,
    print_header,
    print_info,
    print_success,
    print_warning,
    report_table,
)

# Install Rich tracebacks for unexpected errors
install_rich_traceback(show_locals=False, width=100, word_wrap=True)

console = Console()


def show_error_panel(title: str, message: str, hint: Optional[str] = None) -> None:
    """Display a styled error panel with optional hint."""
    content = f"[bold]{message}[/bold]"
    if hint:
        content += f"\n\n[{THEME['muted']}]Hint: {hint}[/]"

    console.print()
    console.print(Panel(
        content,
        title=f"[bold {THEME['error']}]{title}[/]",
        border_style=THEME["error"],
        padding=(1, 2),
    ))
    console.print()


def print_version(ctx: click.Context, param: click.Parameter, value: bool) -> None:
    """Print version and exit."""
    if not value or ctx.resilient_parsing:
        return
    click.echo(f"llnsim {__version__}")
    ctx.exit()


def parse_densities(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> Optional[List[int]]:
    """Parse ``20,30,40`` into a list of node counts."""
    if value is None:
        return None
    try:
        densities = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")
    if not densities:
        raise click.BadParameter("at least one density is required")
    return densities


def load_scenario(
    config_path: Optional[Path],
    seed: Optional[int] = None,
    repetitions: Optional[int] = None,
    duration: Optional[float] = None,
    log_events: bool = False,
    log_radio: bool = False,
    log_control: bool = False,
) -> ScenarioConfig:
    """Load the config (or defaults) and apply command-line overrides.

    Exits with an error panel when the configuration is invalid.
    """
    try:
        cfg = load_config(config_path) if config_path else config_from_dict({})
        cfg = with_overrides(cfg, seed=seed, repetitions=repetitions, duration=duration)
        return with_logs(cfg, events=log_events, radio=log_radio, control=log_control)
    except ConfigError as e:
        show_error_panel("Configuration Error", str(e), "Check the config file against the documented schema")
        sys.exit(1)


def scenario_options(func: Callable) -> Callable:
    """Options shared by run, sweep and compare."""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
                     help="Scenario file (JSON or YAML); defaults apply when omitted"),
        click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
                     help="Output directory for CSVs, manifest, dumps and traces"),
        click.option("--seed", type=int, default=None, help="Override the base seed"),
        click.option("--repetitions", type=int, default=None, help="Override the repetition count"),
        click.option("--duration", type=float, default=None, help="Override the simulated duration (s)"),
        click.option("--log-events", is_flag=True, default=False, help="Dump every dispatched event"),
        click.option("--log-radio", is_flag=True, default=False, help="Dump per-node radio intervals"),
        click.option("--log-control", is_flag=True, default=False, help="Dump control-plane messages"),
        click.option("--threads", type=int, default=None,
                     help=f"Parallel repetitions (default from {ENV_THREADS}; 0 = serial)"),
        click.option("--quiet", is_flag=True, default=False, help="Skip the summary table"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _progress(total: int, label: str) -> RunProgressDisplay:
    return RunProgressDisplay(total, label=label, console=console)


def _report_aborted(aborted: List[RepetitionResult]) -> None:
    for r in aborted:
        print_error(console, f"rep {r.rep} ({r.n_nodes} nodes): {r.aborted}")


def _workers(threads: Optional[int]) -> int:
    try:
        return resolve_workers(threads)
    except ConfigError as e:
        show_error_panel("Configuration Error", str(e))
        sys.exit(1)


@click.group(invoke_without_command=True)
@click.option(
    "--version",
    is_flag=True,
    callback=print_version,
    expose_value=False,
    is_eager=True,
    help="Show version and exit.",
)
@click.option(
    "-v",
    "--verbose",
    is_flag=True,
    default=False,
    help="Enable verbose debug output.",
)
@click.pass_context
def main(ctx: click.Context, verbose: bool) -> None:
    """llnsim - RPL low-power network simulator.

    Measures per-node power of RPL networks under node mobility and density.
    """
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose

    setup_logging(verbose=verbose)

    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@main.command()
@scenario_options
@click.option("--density", type=int, default=None, help="Override the node count")
def run(
    config_path: Optional[Path],
    out_dir: Optional[Path],
    seed: Optional[int],
    repetitions: Optional[int],
    duration: Optional[float],
    log_events: bool,
    log_radio: bool,
    log_control: bool,
    threads: Optional[int],
    quiet: bool,
    density: Optional[int],
) -> None:
    """Run every repetition of one scenario."""
    cfg = load_scenario(config_path, seed, repetitions, duration, log_events, log_radio, log_control)
    if density is not None:
        try:
            cfg = with_overrides(cfg, n_nodes=density)
        except ConfigError as e:
            show_error_panel("Configuration Error", str(e))
            sys.exit(1)
    workers = _workers(threads)

    print_header(console, f"llnsim run: {cfg.n_nodes} nodes, {cfg.repetitions} repetition(s)")
    with _progress(cfg.repetitions, "repetitions") as display:
        results = run_scenario(cfg, threads=workers, on_result=lambda r: display.advance(r.ok))

    if out_dir:
        try:
            write_run(results, out_dir)
        except OSError as e:
            show_error_panel("Export Error", str(e), f"Is {out_dir} writable?")
            sys.exit(1)
        print_success(console, f"Results written to {out_dir}")
    if not quiet:
        console.print(report_table([results.report]))
    if results.aborted:
        _report_aborted(results.aborted)
        sys.exit(1)


@main.command()
@scenario_options
@click.option("--density", "densities", callback=parse_densities, default=None,
              help="Comma-separated node counts (default from config, else 20,30,40,50)")
def sweep(
    config_path: Optional[Path],
    out_dir: Optional[Path],
    seed: Optional[int],
    repetitions: Optional[int],
    duration: Optional[float],
    log_events: bool,
    log_radio: bool,
    log_control: bool,
    threads: Optional[int],
    quiet: bool,
    densities: Optional[List[int]],
) -> None:
    """Run the scenario at several network densities."""
    cfg = load_scenario(config_path, seed, repetitions, duration, log_events, log_radio, log_control)
    densities = densities or cfg.sweep_densities
    workers = _workers(threads)

    print_header(console, f"llnsim sweep: densities {', '.join(map(str, densities))}")
    try:
        with _progress(cfg.repetitions * len(densities), "repetitions") as display:
            results = run_sweep(cfg, densities, threads=workers, on_result=lambda r: display.advance(r.ok))
    except ConfigError as e:
        show_error_panel("Configuration Error", str(e))
        sys.exit(1)

    if out_dir:
        try:
            write_sweep(results, out_dir)
        except OSError as e:
            show_error_panel("Export Error", str(e), f"Is {out_dir} writable?")
            sys.exit(1)
        print_success(console, f"Results written to {out_dir}")
    if not quiet:
        console.print(report_table([results[d].report for d in densities]))
    aborted = [r for s in results.values() for r in s.aborted]
    if aborted:
        _report_aborted(aborted)
        sys.exit(1)


@main.command()
@scenario_options
@click.option("--density", "densities", callback=parse_densities, default=None,
              help="Comma-separated node counts (default from config, else 20,30,40,50)")
def compare(
    config_path: Optional[Path],
    out_dir: Optional[Path],
    seed: Optional[int],
    repetitions: Optional[int],
    duration: Optional[float],
    log_events: bool,
    log_radio: bool,
    log_control: bool,
    threads: Optional[int],
    quiet: bool,
    densities: Optional[List[int]],
) -> None:
    """Compare a static arm against the configured mobile arm."""
    cfg = load_scenario(config_path, seed, repetitions, duration, log_events, log_radio, log_control)
    if cfg.mobility.is_static:
        print_warning(console, "mobility model is static; both arms will be identical")
    densities = densities or cfg.sweep_densities
    workers = _workers(threads)

    print_header(console, f"llnsim compare: static vs {cfg.mobility.model}")
    try:
        with _progress(2 * cfg.repetitions * len(densities), "repetitions") as display:
            arms = run_arms(cfg, densities, threads=workers, on_result=lambda r: display.advance(r.ok))
    except (ConfigError, ComparisonError) as e:
        show_error_panel("Comparison Error", str(e))
        sys.exit(1)

    if out_dir:
        try:
            write_comparison(arms.comparison, arms.static, arms.mobile, out_dir)
        except OSError as e:
            show_error_panel("Export Error", str(e), f"Is {out_dir} writable?")
            sys.exit(1)
        print_success(console, f"Results written to {out_dir}")
    if not quiet:
        console.print(comparison_table(arms.comparison))
        for density in densities:
            total = arms.comparison.get(density, "total_mJ")
            if total.delta_pct is not None:
                print_info(console, f"{density} nodes: mobility changes total energy by {total.delta_pct:+.2f}%")
    if arms.aborted:
        _report_aborted(arms.aborted)
        sys.exit(1)


@main.command("gen-trace")
@click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Scenario file whose mobility section drives the generator")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True,
              help="Directory for node_<id>.movements and all.movements")
@click.option("--seed", type=int, default=None, help="Override the base seed")
@click.option("--rep", type=int, default=0, show_default=True, help="Repetition whose streams are used")
@click.option("--density", type=int, default=None, help="Override the node count")
def gen_trace(
    config_path: Optional[Path],
    out_dir: Path,
    seed: Optional[int],
    rep: int,
    density: Optional[int],
) -> None:
    """Generate BonnMotion-style traces without running a simulation."""
    cfg = load_scenario(config_path, seed=seed)
    try:
        if density is not None:
            cfg = with_overrides(cfg, n_nodes=density)
        if rep < 0:
            raise ConfigError(f"--rep must be >= 0, got {rep}")
    except ConfigError as e:
        show_error_panel("Configuration Error", str(e))
        sys.exit(1)
    if cfg.mobility.is_static:
        show_error_panel("Nothing To Generate", "mobility.model is static", "Set mobility.model in the config")
        sys.exit(1)

    traces = make_traces(cfg, rep, place_nodes(cfg, rep))
    try:
        write_trace_set(traces, out_dir, cfg.area)
    except OSError as e:
        show_error_panel("Export Error", str(e), f"Is {out_dir} writable?")
        sys.exit(1)
    print_success(console, f"Wrote {len(traces)} traces to {out_dir}")
    metric = mobility_metric(traces, seconds_to_ticks(cfg.duration))
    print_info(console, f"mobility metric: {metric:.6g} m/s")


@main.command("replay")
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
def replay(run_dir: Path) -> None:
    """Rebuild nodes.csv of RUN_DIR from its dumps and compare."""
    try:
        outcome = replay_dir(run_dir)
    except (ValueError, OSError) as e:
        show_error_panel("Replay Error", str(e), "Replay needs a run exported with all three --log-* flags")
        sys.exit(1)
    if outcome.matches:
        print_success(console, "replayed metrics match nodes.csv")
        return
    print_error(console, "replayed metrics differ from nodes.csv")
    for stored, rebuilt in outcome.differences():
        console.print(f"  [{THEME['muted']}]stored [/] {stored}")
        console.print(f"  [{THEME['muted']}]rebuilt[/] {rebuilt}")
    sys.exit(1)


if __name__ == "__main__":
    main()
