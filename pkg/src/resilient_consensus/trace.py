# ABOUTME: Time-indexed record of a run plus its CSV trace and dropped-edge sidecar formats.
# ABOUTME: Floats are written with 17 significant digits so a trace reads back bit-exact.

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from resilient_consensus.dynamics import NetworkState
from resilient_consensus.errors import InputError
from resilient_consensus.graph import Digraph, Edge

if TYPE_CHECKING:
    from resilient_consensus.msr import FilterDecision


@dataclass
class Trace:
    """Positions and velocities for steps 0..K, controls and decisions for steps 0..K-1."""

    n: int
    malicious: frozenset[int]
    positions: list[np.ndarray] = field(default_factory=list)
    velocities: list[np.ndarray] = field(default_factory=list)
    controls: list[np.ndarray] = field(default_factory=list)
    updated: list[np.ndarray] = field(default_factory=list)
    decisions: list[dict[int, "FilterDecision"]] = field(default_factory=list)
    ages: list[dict[Edge, int]] = field(default_factory=list)

    @classmethod
    def start(cls, state: NetworkState, malicious: frozenset[int]) -> "Trace":
        return cls(
            n=state.n,
            malicious=frozenset(malicious),
            positions=[state.positions.copy()],
            velocities=[state.velocities.copy()],
        )

    def record(
        self,
        controls: np.ndarray,
        updated: np.ndarray,
        decisions: dict[int, "FilterDecision"],
        ages: dict[Edge, int],
        next_state: NetworkState,
    ) -> None:
        """Append the step that produced next_state."""
        self.controls.append(np.array(controls, dtype=float))
        self.updated.append(np.array(updated, dtype=bool))
        self.decisions.append(decisions)
        self.ages.append(ages)
        self.positions.append(next_state.positions.copy())
        self.velocities.append(next_state.velocities.copy())

    @property
    def steps(self) -> int:
        """Number of simulated steps K; the trace holds K+1 states."""
        return len(self.positions) - 1

    @property
    def normal(self) -> list[int]:
        return [i for i in range(self.n) if i not in self.malicious]

    def position_matrix(self) -> np.ndarray:
        """(K+1) x n array of positions."""
        return np.vstack(self.positions)

    def velocity_matrix(self) -> np.ndarray:
        return np.vstack(self.velocities)

    def effective_graph(self, k: int, graph: Digraph) -> Digraph:
        """Graph of edges normal agents kept at step k, with weights from ``graph``."""
        kept = {agent: decision.kept for agent, decision in self.decisions[k].items()}
        return graph.restricted_to(kept)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def trace_header(n: int) -> list[str]:
    columns = ["k"]
    for prefix in ("x", "v", "u", "upd"):
        columns.extend(f"{prefix}{i + 1}" for i in range(n))
    return columns


def format_trace_csv(trace: Trace) -> str:
    """CSV text: k, x1..xn, v1..vn, u1..un, upd1..updn; the last row has no control."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(trace_header(trace.n))
    for k in range(trace.steps + 1):
        row = [str(k)]
        row.extend(_fmt(value) for value in trace.positions[k])
        row.extend(_fmt(value) for value in trace.velocities[k])
        if k < trace.steps:
            row.extend(_fmt(value) for value in trace.controls[k])
            row.extend("1" if flag else "0" for flag in trace.updated[k])
        else:
            row.extend([""] * (2 * trace.n))
        writer.writerow(row)
    return buffer.getvalue()


def write_trace_csv(trace: Trace, path: Path) -> None:
    path.write_text(format_trace_csv(trace))


def format_decision_log(trace: Trace) -> str:
    """Sidecar CSV, one row per normal agent and step, agents 1-indexed."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["k", "agent", "kept", "dropped_high", "dropped_low", "ages"])

    def labels(nodes: frozenset[int]) -> str:
        return " ".join(str(node + 1) for node in sorted(nodes))

    for k, decisions in enumerate(trace.decisions):
        ages = trace.ages[k]
        for agent in sorted(decisions):
            decision = decisions[agent]
            sample_ages = " ".join(
                f"{j + 1}:{age}" for (j, i), age in sorted(ages.items()) if i == agent
            )
            writer.writerow(
                [
                    k,
                    agent + 1,
                    labels(decision.kept),
                    labels(decision.dropped_high),
                    labels(decision.dropped_low),
                    sample_ages,
                ]
            )
    return buffer.getvalue()


def write_decision_log(trace: Trace, path: Path) -> None:
    path.write_text(format_decision_log(trace))


def parse_trace_csv(text: str, malicious: frozenset[int] = frozenset()) -> Trace:
    """Rebuild positions, velocities, controls and update flags from trace CSV text.

    Filter decisions live in the sidecar and are not restored.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise InputError("Trace CSV is empty")
    header = rows[0]
    if (len(header) - 1) % 4 or header[0] != "k":
        raise InputError("Trace CSV header must be k followed by four blocks of n columns")
    n = (len(header) - 1) // 4
    if header != trace_header(n):
        raise InputError("Trace CSV header does not match the x/v/u/upd layout")

    trace = Trace(n=n, malicious=frozenset(malicious))
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"Trace CSV line {line} has {len(row)} fields, expected {len(header)}")
        values = row[1:]
        trace.positions.append(np.array([float(value) for value in values[:n]]))
        trace.velocities.append(np.array([float(value) for value in values[n : 2 * n]]))
        if values[2 * n]:
            trace.controls.append(np.array([float(value) for value in values[2 * n : 3 * n]]))
            trace.updated.append(np.array([value == "1" for value in values[3 * n :]]))
            trace.decisions.append({})
            trace.ages.append({})
    if not trace.positions:
        raise InputError("Trace CSV has no rows")
    return trace


def read_trace_csv(path: Path, malicious: frozenset[int] = frozenset()) -> Trace:
    return parse_trace_csv(path.read_text(), malicious)
