# ABOUTME: Malicious-agent models (f-total, f-local), model validation and attack strategies.
# ABOUTME: Strategies are pure functions of the step, the current state and the trace so far.

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING, Literal, Protocol

import numpy as np

from resilient_consensus.dynamics import NetworkState, SimParams
from resilient_consensus.errors import InputError, NumericError, ScheduleError
from resilient_consensus.graph import Digraph

if TYPE_CHECKING:
    from resilient_consensus.asyncsim import DelaySchedule, UpdateSchedule
    from resilient_consensus.trace import Trace

logger = logging.getLogger(__name__)


class AdversaryKind(StrEnum):
    F_TOTAL = "f-total"
    F_LOCAL = "f-local"


@dataclass(frozen=True)
class AdversaryModel:
    """Which agents are malicious and the bound they respect."""

    kind: AdversaryKind
    f: int
    malicious: frozenset[int] = frozenset()

    @property
    def n_malicious(self) -> int:
        return len(self.malicious)


def validate_model(g: Digraph, m: AdversaryModel) -> bool:
    """Check the kind-specific bound on malicious agents."""
    for agent in m.malicious:
        if not 0 <= agent < g.n:
            raise InputError(f"Malicious agent {agent} is outside 0..{g.n - 1}")
    if m.f < 0:
        raise InputError(f"f must be nonnegative, got {m.f}")

    if m.kind == AdversaryKind.F_TOTAL:
        return m.n_malicious <= m.f

    for i in range(g.n):
        if i in m.malicious:
            continue
        exposed = len(set(g.in_neighbors(i)) & m.malicious)
        if exposed > m.f:
            logger.debug(f"Normal agent {i} hears {exposed} malicious agents (f={m.f})")
            return False
    return True


@dataclass(frozen=True)
class AdversaryView:
    """Read-only information handed to a strategy at step k."""

    step: int
    state: NetworkState
    params: SimParams
    trace: "Trace | None" = None
    schedule: "tuple[DelaySchedule, UpdateSchedule] | None" = None


class Strategy(Protocol):
    """Rule producing a malicious agent's control input."""

    omissive: bool

    def control(self, agent: int, view: AdversaryView) -> float: ...


def solve_position_control(position: float, velocity: float, target: float, T: float) -> float:
    """u that puts the next position exactly on target; the velocity follows."""
    return 2 * (target - position - T * velocity) / (T * T)


@dataclass(frozen=True)
class HoldStrategy:
    """Pin the agent at a position; from a moving start it settles at rest in two steps."""

    position: float
    omissive: bool = False

    def control(self, agent: int, view: AdversaryView) -> float:
        x = float(view.state.positions[agent])
        v = float(view.state.velocities[agent])
        T = view.params.T
        # Dead-beat law: both closed-loop eigenvalues sit at zero.
        return (self.position - x - 1.5 * T * v) / (T * T)


@dataclass(frozen=True)
class OscillateStrategy:
    """Jump between low (even steps) and high (odd steps)."""

    low: float
    high: float
    omissive: bool = False

    def target(self, step: int) -> float:
        return self.low if step % 2 == 0 else self.high

    def control(self, agent: int, view: AdversaryView) -> float:
        return solve_position_control(
            float(view.state.positions[agent]),
            float(view.state.velocities[agent]),
            self.target(view.step + 1),
            view.params.T,
        )


@dataclass(frozen=True)
class ScriptEntry:
    """One scripted step: a raw control value or a next-position target."""

    kind: Literal["u", "target"]
    value: float


@dataclass(frozen=True)
class ScriptedStrategy:
    """Table-driven control; every simulated step must have an entry."""

    table: Mapping[int, ScriptEntry] = field(default_factory=dict)
    omissive: bool = False

    def control(self, agent: int, view: AdversaryView) -> float:
        entry = self.table.get(view.step)
        if entry is None:
            raise ScheduleError(f"Scripted strategy of agent index {agent} has no entry for step {view.step}")
        if entry.kind == "u":
            return entry.value
        return solve_position_control(
            float(view.state.positions[agent]),
            float(view.state.velocities[agent]),
            entry.value,
            view.params.T,
        )


@dataclass(frozen=True)
class NoiseStrategy:
    """Bounded random controls, reproducible from (seed, agent, step)."""

    amplitude: float
    seed: int = 0
    omissive: bool = False

    def control(self, agent: int, view: AdversaryView) -> float:
        rng = np.random.default_rng([self.seed, agent, view.step])
        return float(rng.uniform(-self.amplitude, self.amplitude))


def strategy_hold(position: float) -> HoldStrategy:
    return HoldStrategy(position)


def strategy_oscillate(low: float, high: float) -> OscillateStrategy:
    return OscillateStrategy(low, high)


def strategy_scripted(table: Mapping[int, ScriptEntry | tuple[str, float]]) -> ScriptedStrategy:
    """Build from entries or (kind, value) pairs."""
    entries: dict[int, ScriptEntry] = {}
    for step, entry in table.items():
        if isinstance(entry, ScriptEntry):
            entries[int(step)] = entry
            continue
        kind, value = entry
        if kind not in ("u", "target"):
            raise InputError(f"Script entry kind must be 'u' or 'target', got {kind!r}")
        entries[int(step)] = ScriptEntry(kind, float(value))  # type: ignore[arg-type]
    return ScriptedStrategy(entries)


def strategy_noise(amplitude: float, seed: int = 0) -> NoiseStrategy:
    return NoiseStrategy(amplitude, seed)


def malicious_controls(
    strategies: Mapping[int, Strategy], view: AdversaryView
) -> dict[int, float]:
    """Evaluate every strategy in agent order and reject non-finite outputs."""
    controls: dict[int, float] = {}
    for agent in sorted(strategies):
        value = float(strategies[agent].control(agent, view))
        if not np.isfinite(value):
            raise NumericError(
                f"Strategy produced {value} at step {view.step}", agent
            )
        controls[agent] = value
    return controls
