# ABOUTME: Partially asynchronous DP-MSR with bounded, time-varying delays and update schedules.
# ABOUTME: Holds per-edge samples between updates and builds the delayed two-step matrices.

import logging
from collections.abc import Callable, Collection, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from resilient_consensus.adversary import (
    AdversaryKind,
    AdversaryModel,
    AdversaryView,
    Strategy,
    malicious_controls,
    strategy_oscillate,
)
from resilient_consensus.dynamics import (
    NetworkState,
    SimParams,
    agent_control,
    normal_mask,
    q_r_matrices,
    require_valid_params,
    step_state,
)
from resilient_consensus.errors import InputError, ScheduleError
from resilient_consensus.graph import Digraph, Edge, build_proposition_graph, proposition_groups
from resilient_consensus.msr import FilterDecision, check_divergence, dp_msr_filter
from resilient_consensus.trace import Trace

if TYPE_CHECKING:
    from resilient_consensus.scenario import Scenario

logger = logging.getLogger(__name__)

# A rule answers for the edges or agents it covers and returns None otherwise.
DelayRule = Callable[[int, int, int], int | None]
UpdateRule = Callable[[int, int], bool | None]


@dataclass(frozen=True)
class ConstantDelay:
    value: int
    edges: frozenset[Edge] | None = None

    def __call__(self, j: int, i: int, k: int) -> int | None:
        if self.edges is not None and (j, i) not in self.edges:
            return None
        return self.value


@dataclass(frozen=True)
class ParityDelay:
    """One delay on even steps, another on odd steps."""

    even: int
    odd: int
    edges: frozenset[Edge] | None = None

    def __call__(self, j: int, i: int, k: int) -> int | None:
        if self.edges is not None and (j, i) not in self.edges:
            return None
        return self.even if k % 2 == 0 else self.odd


@dataclass(frozen=True)
class TableDelay:
    """Explicit delays per (edge, step); unlisted pairs fall through."""

    table: Mapping[tuple[int, int, int], int] = field(default_factory=dict)

    def __call__(self, j: int, i: int, k: int) -> int | None:
        return self.table.get((j, i, k))


@dataclass(frozen=True)
class DelaySchedule:
    """Delays tau_ij[k] in 0..tau; the first rule that answers wins, default 0."""

    tau: int = 0
    rules: tuple[DelayRule, ...] = ()

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise InputError(f"tau must be nonnegative, got {self.tau}")

    def delay(self, j: int, i: int, k: int) -> int:
        for rule in self.rules:
            value = rule(j, i, k)
            if value is not None:
                break
        else:
            value = 0
        if not 0 <= value <= self.tau:
            raise ScheduleError(
                f"Delay {value} on edge ({j}, {i}) at step {k} is outside 0..{self.tau}"
            )
        return value


@dataclass(frozen=True)
class AlwaysUpdate:
    agents: frozenset[int] | None = None

    def __call__(self, i: int, k: int) -> bool | None:
        if self.agents is not None and i not in self.agents:
            return None
        return True


@dataclass(frozen=True)
class PeriodicUpdate:
    """Update when k = period*l + phase."""

    period: int
    phase: int = 0
    agents: frozenset[int] | None = None

    def __post_init__(self) -> None:
        if self.period < 1:
            raise InputError(f"Update period must be at least 1, got {self.period}")

    def __call__(self, i: int, k: int) -> bool | None:
        if self.agents is not None and i not in self.agents:
            return None
        return k % self.period == self.phase % self.period


@dataclass(frozen=True)
class StepsUpdate:
    steps: frozenset[int]
    agents: frozenset[int] | None = None

    def __call__(self, i: int, k: int) -> bool | None:
        if self.agents is not None and i not in self.agents:
            return None
        return k in self.steps


@dataclass(frozen=True)
class UpdateSchedule:
    """Whether agent i updates at step k; the first rule that answers wins, default always."""

    rules: tuple[UpdateRule, ...] = ()

    def updates(self, i: int, k: int) -> bool:
        for rule in self.rules:
            answer = rule(i, k)
            if answer is not None:
                return answer
        return True


class HistoryBuffer:
    """The last tau+1 position vectors; slot l holds x[k-l]."""

    def __init__(
        self,
        tau: int,
        initial: np.ndarray,
        history: Sequence[Iterable[float]] | None = None,
    ) -> None:
        if tau < 0:
            raise InputError(f"tau must be nonnegative, got {tau}")
        initial = np.asarray(initial, dtype=float)
        slots = [initial.copy()]
        # history[0] is x[-1], history[1] is x[-2], and so on.
        for vector in list(history or [])[:tau]:
            earlier = np.asarray(list(vector), dtype=float)
            if earlier.shape != initial.shape:
                raise InputError(f"History vector has shape {earlier.shape}, expected {initial.shape}")
            slots.append(earlier)
        while len(slots) < tau + 1:
            slots.append(slots[-1].copy())
        self._slots = np.vstack(slots)

    @property
    def tau(self) -> int:
        return self._slots.shape[0] - 1

    def at(self, lag: int) -> np.ndarray:
        """Positions lag steps back."""
        if not 0 <= lag <= self.tau:
            raise ScheduleError(f"Lag {lag} is outside the buffer of depth {self.tau}")
        return self._slots[lag]

    def push(self, positions: np.ndarray) -> None:
        self._slots = np.vstack([positions, self._slots[:-1]])

    def z(self) -> np.ndarray:
        """Stacked vector (x[k], x[k-1], ..., x[k-tau])."""
        return self._slots.reshape(-1).copy()

    def slots(self) -> np.ndarray:
        return self._slots.copy()


@dataclass(frozen=True)
class HeldSample:
    value: float
    weight: float
    taken_at: int


@dataclass(frozen=True)
class AgentMemory:
    """Samples latched at an agent's last update and the filter decision taken then."""

    samples: dict[int, HeldSample]
    decision: FilterDecision


class RoundOutcome(NamedTuple):
    state: NetworkState
    decisions: dict[int, FilterDecision]
    control: np.ndarray
    updated: np.ndarray
    ages: dict[Edge, int]


def async_round(
    s: NetworkState,
    buffer: HistoryBuffer,
    g: Digraph,
    delays: DelaySchedule,
    updates: UpdateSchedule,
    p: SimParams,
    strategies: Mapping[int, Strategy],
    memory: dict[int, AgentMemory],
    trace: Trace | None = None,
) -> RoundOutcome:
    """One partially asynchronous step.

    Updating agents latch delayed samples and re-run the filter; the others
    reuse what they latched before. Every normal agent latches at k = 0.
    ``memory`` and ``buffer`` are committed after all agents have been decided.
    """
    k = s.step
    x, v = s.positions, s.velocities
    controls = np.zeros(s.n)
    updated = np.ones(s.n, dtype=bool)
    fresh: dict[int, AgentMemory] = {}
    decisions: dict[int, FilterDecision] = {}
    ages: dict[Edge, int] = {}

    view = AdversaryView(step=k, state=s, params=p, trace=trace, schedule=(delays, updates))
    for agent, value in malicious_controls(strategies, view).items():
        controls[agent] = value

    for i in range(s.n):
        if i in strategies:
            continue
        xi = float(x[i])
        if k == 0 or i not in memory or updates.updates(i, k):
            samples: dict[int, HeldSample] = {}
            for j in g.in_neighbors(i):
                lag = delays.delay(j, i, k)
                samples[j] = HeldSample(float(buffer.at(lag)[j]), g.weight(j, i), k - lag)
            rel = {j: sample.value - xi for j, sample in samples.items()}
            fresh[i] = AgentMemory(samples, dp_msr_filter(rel, p.f, agent=i))
            held = fresh[i]
        else:
            updated[i] = False
            held = memory[i]

        decisions[i] = held.decision
        for j, sample in held.samples.items():
            ages[(j, i)] = k - sample.taken_at
        controls[i] = agent_control(
            xi,
            float(v[i]),
            ((held.samples[j].weight, held.samples[j].value) for j in held.decision.ordered_kept),
            p.alpha,
        )

    next_state = step_state(s, controls, p)
    memory.update(fresh)
    buffer.push(next_state.positions)
    return RoundOutcome(next_state, decisions, controls, updated, ages)


def max_sample_age(
    graph_at: Callable[[int], Digraph],
    delays: DelaySchedule,
    updates: UpdateSchedule,
    normal: Collection[int],
    horizon: int,
) -> int:
    """Largest age a held sample reaches over the horizon.

    Walks the schedules without simulating positions, so it also surfaces
    out-of-range delays before a run starts.
    """
    taken: dict[Edge, int] = {}
    oldest = 0
    for k in range(horizon):
        g = graph_at(k)
        for i in normal:
            if k == 0 or updates.updates(i, k):
                for edge in [edge for edge in taken if edge[1] == i]:
                    del taken[edge]
                for j in g.in_neighbors(i):
                    taken[(j, i)] = k - delays.delay(j, i, k)
        for age in (k - t for t in taken.values()):
            oldest = max(oldest, age)
    return oldest


def delayed_laplacian(
    g: Digraph, ages: Mapping[Edge, int], tau: int, normal: np.ndarray
) -> np.ndarray:
    """L_tau = [D - A_0, -A_1, ..., -A_tau] on normal rows, zero elsewhere."""
    n = g.n
    matrix = np.zeros((n, (tau + 1) * n))
    for (j, i), weight in g.weights.items():
        if not normal[i]:
            continue
        age = ages.get((j, i), 0)
        if age > tau:
            raise ScheduleError(f"Sample on edge ({j}, {i}) is {age} steps old, beyond tau={tau}")
        matrix[i, i] += weight
        matrix[i, age * n + j] -= weight
    return matrix


def lambda_matrices(
    gk: Digraph,
    gk_prev: Digraph,
    ages_k: Mapping[Edge, int],
    ages_prev: Mapping[Edge, int],
    p: SimParams,
    malicious: Collection[int],
    tau: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Lambda_1, Lambda_2 with x[k+1] = Lambda_1 z[k] + Lambda_2 z[k-1] on normal rows.

    ``gk`` and ``gk_prev`` hold the edges actually used at steps k and k-1,
    ``ages_k`` and ``ages_prev`` the ages of the samples on them.
    """
    require_valid_params(p)
    n = p.n
    normal = normal_mask(n, malicious)
    q, r = q_r_matrices(p, malicious)
    head = np.zeros((n, (tau + 1) * n))
    head[:, :n] = np.eye(n)

    lap_k = delayed_laplacian(gk, ages_k, tau, normal)
    lap_prev = delayed_laplacian(gk_prev, ages_prev, tau, normal)
    gamma_k = head - p.half_t_squared * lap_k
    gamma_prev = head - p.half_t_squared * lap_prev

    padded_r = np.zeros_like(head)
    padded_r[:, :n] = r
    lambda1 = padded_r + gamma_k
    lambda2 = -r @ gamma_prev - p.T * q @ lap_prev
    return lambda1, lambda2


def run_async(scenario: "Scenario") -> Trace:
    """Iterate async_round over the horizon, recording update flags and sample ages."""
    delays = scenario.delays or DelaySchedule()
    updates = scenario.updates or UpdateSchedule()
    state = scenario.initial
    buffer = HistoryBuffer(delays.tau, state.positions, scenario.history)
    memory: dict[int, AgentMemory] = {}
    trace = Trace.start(state, scenario.malicious)
    stale_reported = False
    logger.info(
        f"Asynchronous run '{scenario.name}': {scenario.horizon} steps, "
        f"f={scenario.params.f}, tau={delays.tau}"
    )

    for k in range(scenario.horizon):
        outcome = async_round(
            state,
            buffer,
            scenario.graph_at(k),
            delays,
            updates,
            scenario.params,
            scenario.strategies,
            memory,
            trace,
        )
        oldest = max(outcome.ages.values(), default=0)
        if oldest > delays.tau and not stale_reported:
            logger.warning(f"Held sample reached age {oldest} > tau={delays.tau} at step {k}")
            stale_reported = True
        trace.record(outcome.control, outcome.updated, outcome.decisions, outcome.ages, outcome.state)
        state = outcome.state
        check_divergence(state, trace)

    logger.info(f"Run '{scenario.name}' finished at step {state.step}")
    return trace


def proposition1_delays(f: int) -> DelaySchedule:
    """G2 -> G3 links: 0 on even steps, 1 on odd; G2 -> G4 links the reverse; all else 0."""
    groups = proposition_groups(f)
    to_g3 = frozenset((j, i) for j in groups["G2"] for i in groups["G3"])
    to_g4 = frozenset((j, i) for j in groups["G2"] for i in groups["G4"])
    return DelaySchedule(tau=1, rules=(ParityDelay(0, 1, to_g3), ParityDelay(1, 0, to_g4)))


def build_proposition1_scenario(
    f: int,
    a: float,
    b: float,
    c: float,
    g4_links: int | None = None,
    horizon: int = 1000,
    T: float = 0.3,
    alpha: float = 3.67,
) -> "Scenario":
    """Blocking construction: malicious G2 shows a to G3 and b to G4 at every step.

    Each G4 node hears f nodes of G1 unless ``g4_links`` says otherwise; pass 4f
    for the fully wired graph, where G4 drifts toward c.
    """
    from resilient_consensus.scenario import Mode, Scenario

    if not a < c < b:
        raise InputError(f"Need a < c < b, got a={a}, b={b}, c={c}")
    graph = build_proposition_graph(f, g4_links=f if g4_links is None else g4_links)
    groups = proposition_groups(f)

    positions = np.zeros(graph.n)
    positions[groups["G1"]] = c
    positions[groups["G2"]] = a
    positions[groups["G3"]] = a
    positions[groups["G4"]] = b
    # G2 sat at b one step before the start, matching its odd-step value.
    before = positions.copy()
    before[groups["G2"]] = b

    malicious = frozenset(groups["G2"])
    params = SimParams(T=T, alpha=alpha, n=graph.n, f=f)
    return Scenario(
        name=f"proposition1-f{f}",
        params=params,
        graph=graph,
        initial=NetworkState.create(positions),
        adversary=AdversaryModel(AdversaryKind.F_TOTAL, f, malicious),
        strategies={agent: strategy_oscillate(a, b) for agent in sorted(malicious)},
        mode=Mode.ASYNC,
        horizon=horizon,
        delays=proposition1_delays(f),
        updates=UpdateSchedule(),
        history=[before],
    )
