# ABOUTME: Tests for the command-line interface using click's CliRunner.
# ABOUTME: Covers run outputs, exit codes, graph checks, sweeps, reports and preset export.

import json
from pathlib import Path
from typing import Any

import pytest
from click.testing import CliRunner
from rich.console import Console

from resilient_consensus import cli as cli_module
from resilient_consensus.cli import EXIT_NUMERIC, EXIT_VALIDATION, cli
from resilient_consensus.presets import get_preset
from resilient_consensus.scenario import load_scenario
from resilient_consensus.utils.storage import dump_yaml, load_yaml


@pytest.fixture(autouse=True)
def wide_console(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep rich tables on one line per row so output can be matched."""
    monkeypatch.setattr(cli_module, "console", Console(width=200))


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _scenario_file(directory: Path, data: dict[str, Any], name: str = "scenario.yaml") -> Path:
    path = directory / name
    dump_yaml(data, path)
    return path


class TestRun:
    """Test the run command."""

    def test_preset_writes_outputs(self, runner: CliRunner, temp_output_dir: Path) -> None:
        result = runner.invoke(cli, ["run", "--preset", "fig5-sync-dpmsr", "--output-dir", str(temp_output_dir)])
        assert result.exit_code == 0, result.output
        run_dir = temp_output_dir / "fig5-sync-dpmsr"
        for name in ("trace.csv", "decisions.csv", "report.json", "plot.py"):
            assert (run_dir / name).exists()
        report = json.loads((run_dir / "report.json").read_text())["report"]
        assert report["consensus"]["achieved"]
        assert "consensus" in result.output

    def test_scenario_file(self, runner: CliRunner, temp_output_dir: Path) -> None:
        data = get_preset("fig6-async-robust-fail")
        data["horizon"] = 50
        path = _scenario_file(temp_output_dir, data)
        result = runner.invoke(cli, ["run", str(path), "--output-dir", str(temp_output_dir / "out")])
        assert result.exit_code == 0, result.output
        assert "Warning" in result.output
        assert (temp_output_dir / "out" / "fig6-async-robust-fail" / "trace.csv").exists()

    def test_output_dir_from_env(self, runner: CliRunner, temp_output_dir: Path) -> None:
        data = get_preset("fig5-sync-dpmsr")
        data["horizon"] = 60
        path = _scenario_file(temp_output_dir, data)
        result = runner.invoke(
            cli, ["run", str(path)], env={"RESILIENT_CONSENSUS_OUTPUT_DIR": str(temp_output_dir / "env")}
        )
        assert result.exit_code == 0, result.output
        assert (temp_output_dir / "env" / "fig5-sync-dpmsr" / "report.json").exists()

    def test_needs_exactly_one_source(self, runner: CliRunner, temp_output_dir: Path) -> None:
        result = runner.invoke(cli, ["run", "--output-dir", str(temp_output_dir)])
        assert result.exit_code == EXIT_VALIDATION

    def test_unknown_preset(self, runner: CliRunner, temp_output_dir: Path) -> None:
        result = runner.invoke(cli, ["run", "--preset", "nope", "--output-dir", str(temp_output_dir)])
        assert result.exit_code == EXIT_VALIDATION

    def test_invalid_gain(self, runner: CliRunner, temp_output_dir: Path) -> None:
        data = get_preset("fig5-sync-dpmsr")
        data["params"]["alpha"] = 3.0
        path = _scenario_file(temp_output_dir, data)
        result = runner.invoke(cli, ["run", str(path), "--output-dir", str(temp_output_dir)])
        assert result.exit_code == EXIT_VALIDATION
        assert "Invalid input" in result.output

    def test_schema_error(self, runner: CliRunner, temp_output_dir: Path) -> None:
        path = temp_output_dir / "bad.yaml"
        path.write_text("params: {T: 0.3}\n")
        result = runner.invoke(cli, ["run", str(path), "--output-dir", str(temp_output_dir)])
        assert result.exit_code == EXIT_VALIDATION

    def test_divergence_exit_code_and_partial_trace(self, runner: CliRunner, temp_output_dir: Path) -> None:
        data = {
            "name": "rocket",
            "f": 1,
            "horizon": 5,
            "params": {"T": 0.3, "alpha": 3.67},
            "graph": {"generator": "complete", "n": 4},
            "initial": {"positions": [0.0, 1.0, 2.0, 3.0]},
            "adversary": {"agents": {1: {"strategy": "scripted", "table": {0: {"u": 1e12}}}}},
        }
        path = _scenario_file(temp_output_dir, data)
        result = runner.invoke(cli, ["run", str(path), "--output-dir", str(temp_output_dir)])
        assert result.exit_code == EXIT_NUMERIC
        trace = (temp_output_dir / "rocket" / "trace.csv").read_text().splitlines()
        assert len(trace) == 3


class TestCheckGraph:
    """Test the check-graph command."""

    def test_holds(self, runner: CliRunner) -> None:
        result = runner.invoke(cli, ["check-graph", "--generator", "five-agent", "--r", "2", "--s", "2"])
        assert result.exit_code == 0
        assert "(2,2)-robust: holds" in result.output

    def test_fails_with_witness(self, runner: CliRunner) -> None:
        result = runner.invoke(cli, ["check-graph", "--generator", "five-agent", "--r", "3"])
        assert result.exit_code == 0
        assert "(3,1)-robust: fails" in result.output
        assert "witness" in result.output

    def test_removed_edge(self, runner: CliRunner) -> None:
        result = runner.invoke(
            cli, ["check-graph", "--generator", "five-agent", "--remove", "2,5", "--r", "2", "--s", "2"]
        )
        assert "(2,2)-robust: fails" in result.output

    def test_conditions_and_sweep(self, runner: CliRunner) -> None:
        result = runner.invoke(cli, ["check-graph", "--generator", "proposition", "--conditions", "1", "--sweep"])
        assert result.exit_code == 0
        assert "max r" in result.output
        assert "async 3-robust (sufficient): no" in result.output

    def test_edge_file_and_dot(self, runner: CliRunner, temp_output_dir: Path) -> None:
        graph_file = temp_output_dir / "g.txt"
        graph_file.write_text("3\n1 2\n2 3\n3 1\n")
        dot = temp_output_dir / "g.dot"
        result = runner.invoke(cli, ["check-graph", str(graph_file), "--r", "1", "--dot", str(dot)])
        assert result.exit_code == 0
        assert "(1,1)-robust: holds" in result.output
        assert "digraph" in dot.read_text()

    def test_generator_needs_n(self, runner: CliRunner) -> None:
        result = runner.invoke(cli, ["check-graph", "--generator", "complete"])
        assert result.exit_code == EXIT_VALIDATION

    def test_bad_edge_file(self, runner: CliRunner, temp_output_dir: Path) -> None:
        graph_file = temp_output_dir / "g.txt"
        graph_file.write_text("3\n1 1\n")
        result = runner.invoke(cli, ["check-graph", str(graph_file)])
        assert result.exit_code == EXIT_VALIDATION


class TestSweepAndReport:
    """Test the sweep and report commands."""

    def test_sweep(self, runner: CliRunner, temp_output_dir: Path) -> None:
        grid = temp_output_dir / "grid.yaml"
        grid.write_text("horizon: [100]\nalgorithm: [conventional, dp-msr]\n")
        result = runner.invoke(
            cli,
            ["sweep", str(grid), "--preset", "fig5-sync-dpmsr", "--output-dir", str(temp_output_dir)],
        )
        assert result.exit_code == 0, result.output
        lines = (temp_output_dir / "sweep.csv").read_text().splitlines()
        assert len(lines) == 3

    def test_report_from_stored_trace(self, runner: CliRunner, temp_output_dir: Path) -> None:
        data = get_preset("fig6-sync-nonrobust")
        data["horizon"] = 120
        scenario_path = _scenario_file(temp_output_dir, data)
        runner.invoke(cli, ["run", str(scenario_path), "--output-dir", str(temp_output_dir)])
        run_dir = temp_output_dir / "fig6-sync-nonrobust"
        output = temp_output_dir / "again.json"
        result = runner.invoke(
            cli,
            ["report", str(run_dir / "trace.csv"), "--scenario", str(scenario_path), "-o", str(output)],
        )
        assert result.exit_code == 0, result.output
        live = json.loads((run_dir / "report.json").read_text())["report"]
        assert json.loads(output.read_text()) == live

    def test_report_from_truncated_trace(self, runner: CliRunner, temp_output_dir: Path) -> None:
        trace_file = temp_output_dir / "trace.csv"
        trace_file.write_text("k,x1,x2,x3,x4,x5,v1,v2,v3,v4,v5,u1,u2,u3,u4,u5,upd1,upd2,upd3,upd4,upd5\n0,10,4\n")
        result = runner.invoke(cli, ["report", str(trace_file), "--preset", "fig5-sync-dpmsr"])
        assert result.exit_code == EXIT_VALIDATION
        assert "line 2" in result.output

    def test_same_scenario_gives_identical_trace(self, runner: CliRunner, temp_output_dir: Path) -> None:
        data = get_preset("fig6-async-robust-fail")
        data["horizon"] = 80
        path = _scenario_file(temp_output_dir, data)
        traces = []
        for name in ("first", "second"):
            result = runner.invoke(cli, ["run", str(path), "--output-dir", str(temp_output_dir / name)])
            assert result.exit_code == 0, result.output
            traces.append((temp_output_dir / name / "fig6-async-robust-fail" / "trace.csv").read_bytes())
        assert traces[0] == traces[1]


class TestPresets:
    """Test the presets command group."""

    def test_list(self, runner: CliRunner) -> None:
        result = runner.invoke(cli, ["presets", "list"])
        assert result.exit_code == 0
        for name in ("fig4-sync-conventional", "fig7-async-complete", "proposition1"):
            assert name in result.output

    def test_export(self, runner: CliRunner, temp_output_dir: Path) -> None:
        target = temp_output_dir / "p1.yaml"
        result = runner.invoke(cli, ["presets", "export", "proposition1", "-o", str(target)])
        assert result.exit_code == 0
        assert load_scenario(load_yaml(target)).graph.n == 7

    def test_export_unknown(self, runner: CliRunner, temp_output_dir: Path) -> None:
        result = runner.invoke(cli, ["presets", "export", "nope", "-o", str(temp_output_dir / "x.yaml")])
        assert result.exit_code == EXIT_VALIDATION
