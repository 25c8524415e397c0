# ABOUTME: Post-hoc analysis of traces: safety intervals, consensus, envelopes and decay rates.
# ABOUTME: Everything here reads a finished Trace and never changes it.

import logging
from collections.abc import Collection, Iterable
from dataclasses import dataclass
from typing import Any

import numpy as np

from resilient_consensus.asyncsim import HistoryBuffer
from resilient_consensus.dynamics import NetworkState, SimParams
from resilient_consensus.errors import InputError
from resilient_consensus.trace import Trace

logger = logging.getLogger(__name__)

SAFETY_TOLERANCE = 1e-9
CONSENSUS_TOLERANCE = 1e-6
CONSENSUS_TAIL = 50
DECAY_CUTOFF = 1e-10
CONVERGING_RATIO = 1e-3


@dataclass(frozen=True)
class SafetyInterval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise InputError(f"Safety interval has lo={self.lo} > hi={self.hi}")

    def to_dict(self) -> dict[str, float]:
        return {"lo": round(self.lo, 4), "hi": round(self.hi, 4)}


def _normal_list(normal: Iterable[int]) -> list[int]:
    agents = sorted(normal)
    if not agents:
        raise InputError("The normal agent set is empty")
    return agents


def _interval(positions: np.ndarray, velocities: np.ndarray, p: SimParams) -> SafetyInterval:
    drift = p.position_gain * velocities
    return SafetyInterval(
        lo=float(positions.min() + min(0.0, drift.min())),
        hi=float(positions.max() + max(0.0, drift.max())),
    )


def safety_interval_sync(s0: NetworkState, p: SimParams, normal: Iterable[int]) -> SafetyInterval:
    """[min x + min(0, q v), max x + max(0, q v)] over normal agents, q = T - alpha*T^2/2."""
    agents = _normal_list(normal)
    return _interval(s0.positions[agents], s0.velocities[agents], p)


def safety_interval_async(
    z0: HistoryBuffer,
    v0: np.ndarray,
    p: SimParams,
    normal: Iterable[int],
    velocity_agents: Iterable[int] | None = None,
) -> SafetyInterval:
    """Same bound taken over every history slot of the normal agents.

    ``velocity_agents`` widens the velocity term to other agents; by default it
    ranges over the normal ones.
    """
    agents = _normal_list(normal)
    drivers = agents if velocity_agents is None else sorted(velocity_agents)
    positions = z0.slots()[:, agents]
    return _interval(positions, np.asarray(v0, dtype=float)[drivers], p)


@dataclass(frozen=True)
class SafetyCheck:
    """Verdict plus the first (step, agent, position) outside the interval."""

    safe: bool
    first_violation: tuple[int, int, float] | None = None

    def __bool__(self) -> bool:
        return self.safe

    def to_dict(self) -> dict[str, Any]:
        violation = None
        if self.first_violation is not None:
            k, agent, value = self.first_violation
            violation = {"k": k, "agent": agent + 1, "position": value}
        return {"safe": self.safe, "first_violation": violation}


def check_safety(
    trace: Trace,
    interval: SafetyInterval,
    normal: Iterable[int],
    tol: float = SAFETY_TOLERANCE,
) -> SafetyCheck:
    agents = _normal_list(normal)
    positions = trace.position_matrix()[:, agents]
    outside = (positions < interval.lo - tol) | (positions > interval.hi + tol)
    if not outside.any():
        return SafetyCheck(True)
    k, column = np.argwhere(outside)[0]
    return SafetyCheck(False, (int(k), agents[int(column)], float(positions[k, column])))


@dataclass(frozen=True)
class ConsensusVerdict:
    achieved: bool
    value: float | None
    step_of_convergence: int | None
    final_spread: float
    max_speed_tail: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "achieved": self.achieved,
            "value": self.value,
            "step_of_convergence": self.step_of_convergence,
            "final_spread": self.final_spread,
            "max_speed_tail": self.max_speed_tail,
        }


def spread_series(trace: Trace, normal: Iterable[int]) -> np.ndarray:
    """V(k) = max - min of normal positions."""
    positions = trace.position_matrix()[:, _normal_list(normal)]
    return positions.max(axis=1) - positions.min(axis=1)


def check_consensus(
    trace: Trace,
    normal: Iterable[int],
    tol: float = CONSENSUS_TOLERANCE,
    tail: int = CONSENSUS_TAIL,
) -> ConsensusVerdict:
    """Consensus holds when spread and speed stay within tol over the last ``tail`` states."""
    if tol <= 0:
        raise InputError(f"Consensus tolerance must be positive, got {tol}")
    agents = _normal_list(normal)
    states = trace.steps + 1
    if states < tail:
        raise InputError(f"Trace has {states} states, fewer than the tail of {tail}")

    spread = spread_series(trace, agents)
    speed = np.abs(trace.velocity_matrix()[:, agents]).max(axis=1)
    settled = (spread <= tol) & (speed <= tol)

    unsettled = np.flatnonzero(~settled)
    step = int(unsettled[-1]) + 1 if unsettled.size else 0
    achieved = bool(settled[-tail:].all()) if tail > 0 else bool(settled[-1])
    final = trace.positions[-1][agents]
    return ConsensusVerdict(
        achieved=achieved,
        value=float(final.mean()) if achieved else None,
        step_of_convergence=step if step < states else None,
        final_spread=float(spread[-1]),
        max_speed_tail=float(speed[-max(tail, 1) :].max()),
    )


def position_clusters(trace: Trace, normal: Iterable[int], gap: float = 1.0) -> list[list[int]]:
    """Group normal agents whose final positions lie within ``gap`` of a neighbour."""
    agents = _normal_list(normal)
    final = trace.positions[-1]
    ordered = sorted(agents, key=lambda agent: final[agent])
    clusters: list[list[int]] = [[ordered[0]]]
    for previous, agent in zip(ordered, ordered[1:]):
        if final[agent] - final[previous] > gap:
            clusters.append([])
        clusters[-1].append(agent)
    return [sorted(cluster) for cluster in clusters]


def envelopes(
    trace: Trace, normal: Iterable[int], depth: int, history: HistoryBuffer | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Rolling max and min of normal positions over the last ``depth`` steps.

    With ``history`` the slots before step 0 enter the early windows too.
    """
    if depth < 1:
        raise InputError(f"Envelope depth must be at least 1, got {depth}")
    agents = _normal_list(normal)
    positions = trace.position_matrix()[:, agents]
    if history is not None:
        earlier = history.slots()[1:][::-1, agents]
        positions = np.vstack([earlier, positions])
    offset = positions.shape[0] - (trace.steps + 1)
    highs = positions.max(axis=1)
    lows = positions.min(axis=1)
    upper = np.empty(trace.steps + 1)
    lower = np.empty(trace.steps + 1)
    for k in range(trace.steps + 1):
        end = k + offset
        start = max(0, end - depth + 1)
        upper[k] = highs[start : end + 1].max()
        lower[k] = lows[start : end + 1].min()
    return upper, lower


def envelope_depth(tau: int | None) -> int:
    """2 for synchronous runs, tau + 2 for asynchronous ones."""
    return 2 if tau is None else tau + 2


def fit_log_decay(values: Iterable[float], eps: float | None = None) -> tuple[float, float]:
    """Least-squares slope of log(values) against the index, and its R^2."""
    floor = np.finfo(float).eps if eps is None else eps
    series = np.maximum(np.asarray(list(values), dtype=float), floor)
    if series.size < 2:
        raise InputError("A decay fit needs at least two points")
    steps = np.arange(series.size, dtype=float)
    logs = np.log(series)
    slope, intercept = np.polyfit(steps, logs, 1)
    residual = logs - (slope * steps + intercept)
    total = float(((logs - logs.mean()) ** 2).sum())
    r_squared = 1.0 if total == 0 else 1.0 - float((residual**2).sum()) / total
    return float(slope), r_squared


@dataclass(frozen=True)
class RateEstimate:
    slope: float
    r_squared: float
    segment_end: int
    converging: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "slope": self.slope,
            "r_squared": self.r_squared,
            "segment_end": self.segment_end,
            "converging": self.converging,
        }


def rate_estimate(trace: Trace, normal: Collection[int]) -> RateEstimate:
    """Fit log V(k) from k = 0 until V drops below 1e-10 * V(0)."""
    spread = np.maximum(spread_series(trace, normal), np.finfo(float).eps)
    if spread.size < 2:
        return RateEstimate(0.0, 0.0, 0, False)
    below = np.flatnonzero(spread < DECAY_CUTOFF * spread[0])
    end = int(below[0]) if below.size else spread.size - 1
    end = max(end, 1)
    slope, r_squared = fit_log_decay(spread[: end + 1])
    converging = bool(spread[end] < CONVERGING_RATIO * spread[0])
    if not converging:
        logger.debug(f"Spread shrank only to {spread[end] / spread[0]:.3g} of its start")
    return RateEstimate(slope, r_squared, end, converging)
