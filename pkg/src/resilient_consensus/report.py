# ABOUTME: Builds the per-run report (safety, consensus, rate, envelopes) and the JSON around it.
# ABOUTME: Also writes a standalone matplotlib script that plots positions from the trace CSV.

from datetime import datetime
from typing import Any
from zoneinfo import ZoneInfo

import numpy as np

from resilient_consensus.asyncsim import HistoryBuffer
from resilient_consensus.metrics import (
    CONSENSUS_TAIL,
    SafetyInterval,
    check_consensus,
    check_safety,
    envelope_depth,
    envelopes,
    position_clusters,
    rate_estimate,
    safety_interval_async,
    safety_interval_sync,
)
from resilient_consensus.scenario import Mode, Scenario
from resilient_consensus.trace import Trace

ENVELOPE_SLACK = 1e-9


def initial_buffer(scenario: Scenario) -> HistoryBuffer:
    """z[0]: the initial positions followed by the scenario's history."""
    return HistoryBuffer(scenario.tau, scenario.initial.positions, scenario.history)


def scenario_interval(scenario: Scenario, all_velocities: bool = False) -> SafetyInterval:
    """Safety interval fixed by the scenario's initial data."""
    s0 = scenario.initial
    if scenario.mode == Mode.SYNC:
        return safety_interval_sync(s0, scenario.params, scenario.normal)
    buffer = initial_buffer(scenario)
    drivers = range(s0.n) if all_velocities else None
    return safety_interval_async(buffer, s0.velocities, scenario.params, scenario.normal, drivers)


def build_report(scenario: Scenario, trace: Trace) -> dict[str, Any]:
    """Analysis of one trace; identical for a live run and a re-read trace CSV."""
    normal = scenario.normal
    interval = scenario_interval(scenario)
    safety = check_safety(trace, interval, normal)
    consensus = check_consensus(trace, normal, tail=min(CONSENSUS_TAIL, trace.steps + 1))
    rate = rate_estimate(trace, normal)

    if scenario.mode == Mode.ASYNC:
        upper, lower = envelopes(trace, normal, envelope_depth(scenario.tau), initial_buffer(scenario))
    else:
        upper, lower = envelopes(trace, normal, envelope_depth(None))
    monotone = bool(
        np.all(np.diff(upper[1:]) <= ENVELOPE_SLACK) and np.all(np.diff(lower[1:]) >= -ENVELOPE_SLACK)
    )

    report: dict[str, Any] = {
        "scenario": scenario.name,
        "mode": str(scenario.mode),
        "algorithm": str(scenario.algorithm),
        "f": scenario.params.f,
        "steps": trace.steps,
        "malicious": [agent + 1 for agent in sorted(scenario.malicious)],
        "safety_interval": interval.to_dict(),
        "safety": safety.to_dict(),
        "consensus": consensus.to_dict(),
        "rate": rate.to_dict(),
        "envelopes_monotone": monotone,
        "clusters": [[agent + 1 for agent in cluster] for cluster in position_clusters(trace, normal)],
        "final_positions": {str(agent + 1): float(trace.positions[-1][agent]) for agent in normal},
    }
    if scenario.mode == Mode.ASYNC:
        report["safety_interval_all_velocities"] = scenario_interval(scenario, all_velocities=True).to_dict()
    return report


def generate_report_json(report: dict[str, Any]) -> dict[str, Any]:
    """Wrap a report with generation metadata."""
    return {
        "metadata": {
            "generated_at": datetime.now(ZoneInfo("UTC")).isoformat(),
            "source": "resilient-consensus",
        },
        "report": report,
    }


def plot_script(trace_file: str, n: int, interval: SafetyInterval, title: str) -> str:
    """Python source that plots x1..xn against k with the safety interval shaded."""
    return f'''"""Position trajectories for {title}."""

import csv

import matplotlib.pyplot as plt

with open("{trace_file}") as f:
    rows = list(csv.DictReader(f))

steps = [int(row["k"]) for row in rows]
fig, ax = plt.subplots(figsize=(8, 4))
ax.axhspan({interval.lo!r}, {interval.hi!r}, color="0.9", label="safety interval")
for i in range(1, {n} + 1):
    ax.plot(steps, [float(row[f"x{{i}}"]) for row in rows], label=f"agent {{i}}")
ax.set_xlabel("k")
ax.set_ylabel("position")
ax.set_title("{title}")
ax.legend()
fig.tight_layout()
fig.savefig("{title}.png", dpi=150)
'''
