# ABOUTME: Click-based CLI for resilient-consensus.
# ABOUTME: Provides run, check-graph, sweep, report and presets commands.

import json
import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any, NoReturn

import click
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from resilient_consensus import __version__
from resilient_consensus.errors import ConsensusError, DivergenceError, NumericError
from resilient_consensus.graph import (
    Digraph,
    build_complete,
    build_five_agent_example,
    build_proposition_graph,
    build_random,
    build_ring,
    check_conditions,
    is_rs_robust,
    max_robustness_profile,
    read_edge_list,
    to_dot,
)
from resilient_consensus.presets import DESCRIPTIONS, get_preset, list_presets
from resilient_consensus.report import build_report, generate_report_json, plot_script, scenario_interval
from resilient_consensus.scenario import Scenario, load_scenario, run_scenario, validate_scenario
from resilient_consensus.sweep import format_summary_csv, run_sweep
from resilient_consensus.trace import (
    Trace,
    read_trace_csv,
    write_decision_log,
    write_trace_csv,
)
from resilient_consensus.utils import StorageManager, setup_logging
from resilient_consensus.utils.storage import OUTPUT_DIR_ENV

EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

console = Console()


def _fail(message: str, code: int) -> NoReturn:
    console.print(f"[red]{message}[/red]")
    sys.exit(code)


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Map library errors onto the documented exit codes."""
    try:
        yield
    except NumericError as e:
        agent = "" if e.agent is None else f" (agent {e.agent + 1})"
        _fail(f"Numeric failure{agent}: {e}", EXIT_NUMERIC)
    except (ConsensusError, ValidationError, ValueError, yaml.YAMLError) as e:
        _fail(f"Invalid input: {e}", EXIT_VALIDATION)


def _scenario_data(scenario_file: Path | None, preset: str | None, storage: StorageManager) -> tuple[dict[str, Any], Path | None]:
    if (scenario_file is None) == (preset is None):
        _fail("Give exactly one of a scenario file or --preset.", EXIT_VALIDATION)
    if preset is not None:
        return get_preset(preset), None
    assert scenario_file is not None
    return storage.load_scenario(scenario_file), scenario_file.parent


def _print_report(report: dict[str, Any]) -> None:
    table = Table(title=f"Run {report['scenario']}")
    table.add_column("Metric")
    table.add_column("Value")
    interval = report["safety_interval"]
    table.add_row("steps", str(report["steps"]))
    table.add_row("safety interval", f"[{interval['lo']:.4f}, {interval['hi']:.4f}]")
    if "safety_interval_all_velocities" in report:
        wide = report["safety_interval_all_velocities"]
        table.add_row("interval (all velocities)", f"[{wide['lo']:.4f}, {wide['hi']:.4f}]")
    table.add_row("safe", str(report["safety"]["safe"]))
    consensus = report["consensus"]
    table.add_row("consensus", str(consensus["achieved"]))
    if consensus["value"] is not None:
        table.add_row("consensus value", f"{consensus['value']:.6f}")
    table.add_row("final spread", f"{consensus['final_spread']:.3e}")
    table.add_row("log-spread slope", f"{report['rate']['slope']:.4g} (R^2 {report['rate']['r_squared']:.3f})")
    table.add_row("clusters", " | ".join(",".join(map(str, c)) for c in report["clusters"]))
    console.print(table)


def _write_run(scenario: Scenario, trace: Trace, run_dir: Path) -> dict[str, Any]:
    report = build_report(scenario, trace)
    write_trace_csv(trace, run_dir / "trace.csv")
    write_decision_log(trace, run_dir / "decisions.csv")
    (run_dir / "report.json").write_text(json.dumps(generate_report_json(report), indent=2))
    (run_dir / "plot.py").write_text(
        plot_script("trace.csv", trace.n, scenario_interval(scenario), scenario.name)
    )
    return report


@click.group()
@click.version_option(version=__version__, prog_name="resilient-consensus")
def cli() -> None:
    """Simulate and analyse resilient consensus of double-integrator networks."""


@cli.command()
@click.argument("scenario_file", required=False, type=click.Path(exists=True, path_type=Path))
@click.option("--preset", default=None, help="Run a built-in scenario instead of a file.")
@click.option(
    "--output-dir",
    type=click.Path(path_type=Path),
    default=None,
    envvar=OUTPUT_DIR_ENV,
    help="Directory for run outputs.",
)
@click.option("--verbose", is_flag=True, help="Log per-step detail.")
def run(scenario_file: Path | None, preset: str | None, output_dir: Path | None, verbose: bool) -> None:
    """Run a scenario and write trace, decisions, report and plot script."""
    storage = StorageManager(output_dir)
    setup_logging(logging.DEBUG if verbose else logging.INFO, storage.output_dir)

    with _exit_codes():
        data, base_dir = _scenario_data(scenario_file, preset, storage)
        scenario = load_scenario(data, base_dir)
        for warning in validate_scenario(scenario):
            console.print(f"[yellow]Warning: {warning}[/yellow]")
        run_dir = storage.run_dir(scenario.name)
        try:
            trace = run_scenario(scenario)
        except DivergenceError as e:
            write_trace_csv(e.trace, run_dir / "trace.csv")
            console.print(f"[yellow]Partial trace written to {run_dir / 'trace.csv'}[/yellow]")
            raise
        report = _write_run(scenario, trace, run_dir)

    _print_report(report)
    console.print(f"\n[green]Outputs written to {run_dir}[/green]")


def _build_graph(
    graph_file: Path | None,
    generator: str | None,
    n: int | None,
    p: float,
    f: int,
    seed: int,
    removed: tuple[str, ...],
) -> Digraph:
    if (graph_file is None) == (generator is None):
        _fail("Give exactly one of a graph file or --generator.", EXIT_VALIDATION)
    if graph_file is not None:
        graph = read_edge_list(graph_file)
    elif generator == "five-agent":
        graph = build_five_agent_example()
    elif generator == "proposition":
        graph = build_proposition_graph(f)
    else:
        if n is None:
            _fail(f"--generator {generator} needs --n.", EXIT_VALIDATION)
        if generator == "complete":
            graph = build_complete(n)
        elif generator == "ring":
            graph = build_ring(n)
        else:
            graph = build_random(n, p, seed)
    edges = []
    for text in removed:
        j, _, i = text.partition(",")
        edges.append((int(j) - 1, int(i) - 1))
    return graph.without_edges(edges) if edges else graph


@cli.command("check-graph")
@click.argument("graph_file", required=False, type=click.Path(exists=True, path_type=Path))
@click.option(
    "--generator",
    type=click.Choice(["complete", "ring", "random", "five-agent", "proposition"]),
    default=None,
)
@click.option("--n", type=int, default=None, help="Node count for generated graphs.")
@click.option("--p", type=float, default=0.5, help="Arc probability for random graphs.")
@click.option("--f", "group_f", type=int, default=1, help="f for the proposition graph.")
@click.option("--seed", type=int, default=0)
@click.option("--remove", multiple=True, help="Edge 'j,i' (1-indexed) to remove; repeatable.")
@click.option("--r", type=int, default=None)
@click.option("--s", type=int, default=1)
@click.option("--sweep", is_flag=True, help="Report the largest r for every s.")
@click.option("--conditions", type=int, default=None, help="Check consensus conditions for this f.")
@click.option("--dot", type=click.Path(path_type=Path), default=None, help="Write the graph as DOT.")
def check_graph(
    graph_file: Path | None,
    generator: str | None,
    n: int | None,
    p: float,
    group_f: int,
    seed: int,
    remove: tuple[str, ...],
    r: int | None,
    s: int,
    sweep: bool,
    conditions: int | None,
    dot: Path | None,
) -> None:
    """Check (r,s)-robustness of a graph file or a generated graph."""
    setup_logging(logging.WARNING)
    with _exit_codes():
        graph = _build_graph(graph_file, generator, n, p, group_f, seed, remove)
        console.print(f"Graph with {graph.n} nodes and {len(graph.edges)} edges")

        if r is not None:
            result = is_rs_robust(graph, r, s)
            if result.holds:
                console.print(f"[green]({r},{s})-robust: holds[/green]")
            else:
                witness = result.to_dict()["witness"]
                console.print(f"[yellow]({r},{s})-robust: fails, witness S1={witness[0]} S2={witness[1]}[/yellow]")

        if sweep:
            table = Table(title="Maximal robustness")
            table.add_column("s")
            table.add_column("max r")
            for size, best in max_robustness_profile(graph).items():
                table.add_row(str(size), str(best))
            console.print(table)

        if conditions is not None:
            for label, holds in check_conditions(graph, conditions).to_dict().items():
                if label != "f":
                    console.print(f"{label}: {'[green]yes[/green]' if holds else '[yellow]no[/yellow]'}")

        if dot is not None:
            dot.write_text(to_dot(graph))
            console.print(f"[green]DOT written to {dot}[/green]")


@cli.command("sweep")
@click.argument("grid_file", type=click.Path(exists=True, path_type=Path))
@click.option("--template", "template_file", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--preset", default=None, help="Use a built-in scenario as the template.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option(
    "--output-dir",
    type=click.Path(path_type=Path),
    default=None,
    envvar=OUTPUT_DIR_ENV,
)
def sweep_command(
    grid_file: Path,
    template_file: Path | None,
    preset: str | None,
    workers: int,
    output_dir: Path | None,
) -> None:
    """Run a template scenario over a grid of dotted-key overrides."""
    storage = StorageManager(output_dir)
    setup_logging(logging.INFO, storage.output_dir)
    with _exit_codes():
        template, base_dir = _scenario_data(template_file, preset, storage)
        grid = storage.load_grid(grid_file)
        rows = run_sweep(template, grid, workers, base_dir)
        summary = storage.output_dir / "sweep.csv"
        summary.write_text(format_summary_csv(rows))

    table = Table(title="Sweep")
    for column in ("run", "overrides", "status", "consensus", "safe"):
        table.add_column(column)
    for row in rows:
        overrides = "; ".join(f"{key}={value}" for key, value in row.overrides.items())
        table.add_row(str(row.run), overrides, row.status, str(row.consensus), str(row.safe))
    console.print(table)
    console.print(f"\n[green]Summary written to {summary}[/green]")


@cli.command("report")
@click.argument("trace_file", type=click.Path(exists=True, path_type=Path))
@click.option("--scenario", "scenario_file", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--preset", default=None)
@click.option("-o", "--output", type=click.Path(path_type=Path), default=None, help="Defaults to stdout.")
def report_command(
    trace_file: Path, scenario_file: Path | None, preset: str | None, output: Path | None
) -> None:
    """Recompute the report of a stored trace."""
    setup_logging(logging.WARNING)
    with _exit_codes():
        storage = StorageManager(trace_file.parent)
        data, base_dir = _scenario_data(scenario_file, preset, storage)
        scenario = load_scenario(data, base_dir)
        trace = read_trace_csv(trace_file, scenario.malicious)
        report = build_report(scenario, trace)

    json_str = json.dumps(report, indent=2)
    if output:
        output.write_text(json_str)
        console.print(f"[green]Report written to {output}[/green]")
    else:
        click.echo(json_str)


@cli.group()
def presets() -> None:
    """Built-in scenarios."""


@presets.command("list")
def presets_list() -> None:
    """List the built-in scenarios."""
    table = Table(title="Presets")
    table.add_column("Name")
    table.add_column("Description")
    for name in list_presets():
        table.add_row(name, DESCRIPTIONS.get(name, ""))
    console.print(table)


@presets.command("export")
@click.argument("name")
@click.option("-o", "--output", type=click.Path(path_type=Path), default=None)
def presets_export(name: str, output: Path | None) -> None:
    """Write a preset as a scenario file."""
    with _exit_codes():
        data = get_preset(name)
    target = output or Path(f"{name}.yaml")
    StorageManager(target.parent).save_scenario(data, target)
    console.print(f"[green]Preset {name} written to {target}[/green]")


def main() -> None:
    """Main entry point."""
    try:
        cli()
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted.[/yellow]")
        sys.exit(0)


if __name__ == "__main__":
    main()
