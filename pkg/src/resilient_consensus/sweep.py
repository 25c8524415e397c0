# ABOUTME: Parameter sweeps: a scenario template, a grid of dotted-key overrides, one run per combination.
# ABOUTME: Runs fan out over a process pool; a failing run becomes an error row and the sweep continues.

import concurrent.futures
import copy
import csv
import io
import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from resilient_consensus.errors import ConsensusError
from resilient_consensus.report import build_report
from resilient_consensus.scenario import load_scenario, run_scenario, validate_scenario

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "run",
    "overrides",
    "status",
    "consensus",
    "safe",
    "value",
    "final_spread",
    "slope",
    "error",
]


@dataclass
class SweepRow:
    run: int
    overrides: dict[str, Any]
    status: str = "ok"
    consensus: bool | None = None
    safe: bool | None = None
    value: float | None = None
    final_spread: float | None = None
    slope: float | None = None
    error: str = ""
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "run": self.run,
            "overrides": self.overrides,
            "status": self.status,
            "consensus": self.consensus,
            "safe": self.safe,
            "value": self.value,
            "final_spread": self.final_spread,
            "slope": self.slope,
            "error": self.error,
        }


def set_dotted(data: dict[str, Any], key: str, value: Any) -> None:
    """Set data[a][b][c] for key "a.b.c", creating mappings on the way.

    Numeric parts address integer keys, so "adversary.agents.1.position" works.
    """
    parts = key.split(".")
    node: Any = data
    for part in parts[:-1]:
        part_key: Any = int(part) if part.isdigit() else part
        if part_key not in node or not isinstance(node[part_key], dict):
            node[part_key] = {}
        node = node[part_key]
    last = parts[-1]
    node[int(last) if last.isdigit() else last] = value


def expand_grid(grid: dict[str, list[Any]]) -> list[dict[str, Any]]:
    """Cartesian product of the grid; an empty grid gives no runs."""
    if not grid:
        return []
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[key] for key in keys))]


def _run_one(args: dict[str, Any]) -> SweepRow:
    """Module-level worker so it pickles into the process pool."""
    row = SweepRow(run=args["run"], overrides=args["overrides"])
    data = copy.deepcopy(args["template"])
    for key, value in args["overrides"].items():
        set_dotted(data, key, value)
    try:
        scenario = load_scenario(data, args["base_dir"])
        row.warnings = validate_scenario(scenario)
        trace = run_scenario(scenario)
        report = build_report(scenario, trace)
    except (ConsensusError, ValidationError) as e:
        row.status = "error"
        row.error = f"{type(e).__name__}: {e}".replace("\n", " ")
        return row

    row.consensus = report["consensus"]["achieved"]
    row.safe = report["safety"]["safe"]
    row.value = report["consensus"]["value"]
    row.final_spread = report["consensus"]["final_spread"]
    row.slope = report["rate"]["slope"]
    return row


def run_sweep(
    template: dict[str, Any],
    grid: dict[str, list[Any]],
    workers: int = 1,
    base_dir: Path | None = None,
) -> list[SweepRow]:
    """Run every grid combination; rows come back in grid order."""
    jobs = [
        {"run": index, "overrides": overrides, "template": template, "base_dir": base_dir}
        for index, overrides in enumerate(expand_grid(grid), start=1)
    ]
    logger.info(f"Sweep of {len(jobs)} run(s) on {workers} worker(s)")
    if workers <= 1 or len(jobs) <= 1:
        rows = [_run_one(job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_run_one, jobs))

    failed = [row for row in rows if row.status != "ok"]
    for row in failed:
        logger.warning(f"Run {row.run} failed: {row.error}")
    return rows


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def format_summary_csv(rows: list[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        data = row.to_dict()
        data["overrides"] = ";".join(f"{key}={value}" for key, value in row.overrides.items())
        writer.writerow([_cell(data[column]) for column in SUMMARY_COLUMNS])
    return buffer.getvalue()
