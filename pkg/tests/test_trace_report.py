# ABOUTME: Tests for trace CSV and decision-log formats and for the run report.
# ABOUTME: A report rebuilt from a stored trace must match the one from the live run.

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from resilient_consensus.dynamics import NetworkState
from resilient_consensus.errors import InputError
from resilient_consensus.report import build_report, generate_report_json, plot_script, scenario_interval
from resilient_consensus.scenario import Scenario, run_scenario
from resilient_consensus.trace import (
    Trace,
    format_decision_log,
    format_trace_csv,
    parse_trace_csv,
    read_trace_csv,
    trace_header,
    write_trace_csv,
)

ScenarioBuilder = Callable[..., Scenario]


class TestTraceCsv:
    """Test the trace CSV layout."""

    def test_header(self) -> None:
        assert trace_header(2) == ["k", "x1", "x2", "v1", "v2", "u1", "u2", "upd1", "upd2"]

    def test_rows(self) -> None:
        trace = Trace.start(NetworkState.create([0.1, 2.0]), frozenset())
        trace.record(
            np.array([1.0, -1.0]),
            np.array([True, False]),
            {},
            {},
            NetworkState.create([0.2, 1.5], [0.3, -0.3], step=1),
        )
        lines = format_trace_csv(trace).splitlines()
        assert lines[1] == "0,0.10000000000000001,2,0,0,1,-1,1,0"
        assert lines[2] == "1,0.20000000000000001,1.5,0.29999999999999999,-0.29999999999999999,,,,"

    def test_stored_trace_reads_back_exactly(
        self, preset_scenario: ScenarioBuilder, temp_output_dir: Path
    ) -> None:
        scenario = preset_scenario("fig6-async-robust-fail", horizon=40)
        trace = run_scenario(scenario)
        path = temp_output_dir / "trace.csv"
        write_trace_csv(trace, path)
        loaded = read_trace_csv(path, scenario.malicious)
        assert np.array_equal(loaded.position_matrix(), trace.position_matrix())
        assert np.array_equal(loaded.velocity_matrix(), trace.velocity_matrix())
        assert np.array_equal(np.vstack(loaded.updated), np.vstack(trace.updated))
        assert loaded.steps == 40

    def test_bad_header(self) -> None:
        with pytest.raises(InputError):
            parse_trace_csv("k,x1,v1,u1\n0,1,2,3\n")
        with pytest.raises(InputError):
            parse_trace_csv("")

    def test_truncated_row(self) -> None:
        with pytest.raises(InputError, match="line 2 has 2 fields, expected 5"):
            parse_trace_csv("k,x1,v1,u1,upd1\n0,1\n")

    def test_header_only(self) -> None:
        with pytest.raises(InputError):
            parse_trace_csv(",".join(trace_header(1)) + "\n")


class TestDecisionLog:
    """Test the dropped-edge sidecar."""

    def test_first_step_of_reference_run(self, preset_scenario: ScenarioBuilder) -> None:
        trace = run_scenario(preset_scenario("fig5-sync-dpmsr", horizon=1))
        lines = format_decision_log(trace).splitlines()
        assert lines[0] == "k,agent,kept,dropped_high,dropped_low,ages"
        assert len(lines) == 5
        assert lines[-1] == "0,5,2,1,4,1:0 2:0 4:0"


class TestReport:
    """Test the per-run report."""

    def test_fields(self, preset_scenario: ScenarioBuilder) -> None:
        scenario = preset_scenario("fig5-sync-dpmsr", horizon=60)
        report = build_report(scenario, run_scenario(scenario))
        assert report["malicious"] == [1]
        assert report["safety_interval"] == {"lo": 0.1909, "hi": 8.5394}
        assert report["safety"]["safe"]
        assert set(report["final_positions"]) == {"2", "3", "4", "5"}
        assert "safety_interval_all_velocities" not in report

    def test_async_reports_both_intervals(self, preset_scenario: ScenarioBuilder) -> None:
        scenario = preset_scenario("fig7-async-complete", horizon=60)
        report = build_report(scenario, run_scenario(scenario))
        assert report["safety_interval"]["lo"] == pytest.approx(0.86515, abs=1e-4)
        assert report["safety_interval"]["hi"] == pytest.approx(10.40455, abs=1e-4)
        assert report["safety_interval_all_velocities"]["hi"] == 10.5394

    def test_stored_trace_gives_same_report(
        self, preset_scenario: ScenarioBuilder, temp_output_dir: Path
    ) -> None:
        scenario = preset_scenario("fig6-sync-nonrobust", horizon=80)
        trace = run_scenario(scenario)
        write_trace_csv(trace, temp_output_dir / "trace.csv")
        stored = read_trace_csv(temp_output_dir / "trace.csv", scenario.malicious)
        assert build_report(scenario, stored) == build_report(scenario, trace)

    def test_json_metadata(self) -> None:
        wrapped = generate_report_json({"scenario": "x"})
        assert wrapped["report"] == {"scenario": "x"}
        assert wrapped["metadata"]["source"] == "resilient-consensus"
        assert wrapped["metadata"]["generated_at"].endswith("+00:00")

    def test_plot_script(self, preset_scenario: ScenarioBuilder) -> None:
        scenario = preset_scenario("fig5-sync-dpmsr")
        script = plot_script("trace.csv", 5, scenario_interval(scenario), "fig5")
        assert "import matplotlib.pyplot as plt" in script
        assert 'open("trace.csv")' in script
        assert "range(1, 5 + 1)" in script
        compile(script, "plot.py", "exec")
