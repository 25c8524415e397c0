# ABOUTME: The DP-MSR filter and the synchronous simulation engine.
# ABOUTME: Normal agents drop up to f largest and f smallest relative positions before updating.

import logging
from collections.abc import Mapping
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from resilient_consensus.adversary import AdversaryView, Strategy, malicious_controls
from resilient_consensus.dynamics import NetworkState, SimParams, agent_control, step_state
from resilient_consensus.errors import DivergenceError, InputError
from resilient_consensus.graph import Digraph
from resilient_consensus.trace import Trace

if TYPE_CHECKING:
    from resilient_consensus.scenario import Scenario

logger = logging.getLogger(__name__)

DIVERGENCE_GUARD = 1e9


@dataclass(frozen=True)
class FilterDecision:
    """How one normal agent split its in-neighbours at one step."""

    agent: int
    kept: frozenset[int]
    dropped_high: frozenset[int]
    dropped_low: frozenset[int]

    @property
    def ordered_kept(self) -> list[int]:
        return sorted(self.kept)


def dp_msr_filter(rel_values: Mapping[int, float], f: int, agent: int = -1) -> FilterDecision:
    """Split neighbours by relative position x_j - x_i.

    High side: the f largest values >= 0, or all of them when fewer than f.
    Low side: the same with values <= 0 among neighbours the high side left.
    Ties go to the lower neighbour index.
    """
    if f < 0:
        raise InputError(f"f must be nonnegative, got {f}")
    high = sorted((j for j, value in rel_values.items() if value >= 0), key=lambda j: (-rel_values[j], j))
    dropped_high = frozenset(high[:f])
    low = sorted(
        (j for j, value in rel_values.items() if value <= 0 and j not in dropped_high),
        key=lambda j: (rel_values[j], j),
    )
    dropped_low = frozenset(low[:f])
    kept = frozenset(rel_values) - dropped_high - dropped_low
    return FilterDecision(agent, kept, dropped_high, dropped_low)


def sync_round(
    s: NetworkState,
    g: Digraph,
    p: SimParams,
    strategies: Mapping[int, Strategy],
    trace: Trace | None = None,
) -> tuple[NetworkState, list[FilterDecision], np.ndarray]:
    """One synchronous step: filter on the step-k snapshot, then advance all agents."""
    x, v = s.positions, s.velocities
    controls = np.zeros(s.n)
    decisions: list[FilterDecision] = []

    view = AdversaryView(step=s.step, state=s, params=p, trace=trace)
    for agent, value in malicious_controls(strategies, view).items():
        controls[agent] = value

    for i in range(s.n):
        if i in strategies:
            continue
        xi = float(x[i])
        rel = {j: float(x[j]) - xi for j in g.in_neighbors(i)}
        decision = dp_msr_filter(rel, p.f, agent=i)
        decisions.append(decision)
        controls[i] = agent_control(
            xi,
            float(v[i]),
            ((g.weight(j, i), float(x[j])) for j in decision.ordered_kept),
            p.alpha,
        )

    return step_state(s, controls, p), decisions, controls


def check_divergence(state: NetworkState, trace: Trace) -> None:
    """Abort when a position leaves the divergence guard."""
    beyond = np.flatnonzero(np.abs(state.positions) > DIVERGENCE_GUARD)
    if beyond.size:
        agent = int(beyond[0])
        raise DivergenceError(
            f"Position beyond |x| = {DIVERGENCE_GUARD:g} at step {state.step}",
            agent,
            trace,
        )


def run_sync(scenario: "Scenario") -> Trace:
    """Iterate sync_round over the horizon and record every step."""
    state = scenario.initial
    strategies = scenario.strategies
    trace = Trace.start(state, scenario.malicious)
    logger.info(f"Synchronous run '{scenario.name}': {scenario.horizon} steps, f={scenario.params.f}")

    for k in range(scenario.horizon):
        graph = scenario.graph_at(k)
        state, decisions, controls = sync_round(state, graph, scenario.params, strategies, trace)
        ages = {(j, d.agent): 0 for d in decisions for j in graph.in_neighbors(d.agent)}
        trace.record(
            controls,
            np.ones(state.n, dtype=bool),
            {d.agent: d for d in decisions},
            ages,
            state,
        )
        check_divergence(state, trace)

    logger.info(f"Run '{scenario.name}' finished at step {state.step}")
    return trace
