# ABOUTME: Scenario files (YAML, validated by pydantic) and the runtime Scenario they build.
# ABOUTME: Also the pre-run validator and the dispatch to the sync or async engine.

import logging
from dataclasses import dataclass, field, replace
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from resilient_consensus.adversary import (
    AdversaryKind,
    AdversaryModel,
    ScriptEntry,
    Strategy,
    strategy_hold,
    strategy_noise,
    strategy_oscillate,
    strategy_scripted,
    validate_model,
)
from resilient_consensus.asyncsim import (
    AlwaysUpdate,
    ConstantDelay,
    DelayRule,
    DelaySchedule,
    ParityDelay,
    PeriodicUpdate,
    StepsUpdate,
    TableDelay,
    UpdateRule,
    UpdateSchedule,
    max_sample_age,
    run_async,
)
from resilient_consensus.dynamics import NetworkState, SimParams, require_valid_params
from resilient_consensus.errors import InputError
from resilient_consensus.graph import (
    ENUMERATION_GUARD,
    Digraph,
    GraphSequence,
    build_complete,
    build_five_agent_example,
    build_proposition_graph,
    build_random,
    build_ring,
    check_conditions,
    is_jointly_robust,
    read_edge_list,
)
from resilient_consensus.msr import run_sync
from resilient_consensus.trace import Trace

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class Mode(StrEnum):
    SYNC = "sync"
    ASYNC = "async"


class Algorithm(StrEnum):
    DP_MSR = "dp-msr"
    CONVENTIONAL = "conventional"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ParamsSpec(_Strict):
    T: float = Field(gt=0)
    alpha: float = Field(gt=0)


class GraphSpec(_Strict):
    """Exactly one of preset, generator, edges or file; 1-indexed edges."""

    preset: Literal["five-agent"] | None = None
    generator: Literal["complete", "ring", "random", "proposition"] | None = None
    n: int | None = None
    p: float | None = None
    bidirectional: bool = True
    f: int | None = None
    g4_links: int | None = None
    edges: list[list[float]] | None = None
    file: Path | None = None
    weight: float | None = None
    remove_edges: list[tuple[int, int]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _one_source(self) -> "GraphSpec":
        sources = [self.preset, self.generator, self.edges, self.file]
        if sum(source is not None for source in sources) != 1:
            raise ValueError("graph needs exactly one of preset, generator, edges or file")
        if self.generator in ("complete", "ring", "random") and self.n is None:
            raise ValueError(f"generator {self.generator} needs n")
        if self.generator == "random" and self.p is None:
            raise ValueError("generator random needs p")
        if self.generator == "proposition" and self.f is None:
            raise ValueError("generator proposition needs f")
        if self.edges is not None and self.n is None:
            raise ValueError("an inline edge list needs n")
        return self

    def build(self, seed: int = 0, base_dir: Path | None = None) -> Digraph:
        if self.preset == "five-agent":
            graph = build_five_agent_example(self.weight or 1.0 / 3.0)
        elif self.generator == "complete":
            graph = build_complete(self.n or 0, self.weight)
        elif self.generator == "ring":
            graph = build_ring(self.n or 0, self.bidirectional, self.weight)
        elif self.generator == "random":
            graph = build_random(self.n or 0, self.p or 0.0, seed, self.weight)
        elif self.generator == "proposition":
            graph = build_proposition_graph(self.f or 0, self.g4_links, self.weight)
        elif self.edges is not None:
            n = self.n or 0
            rows = []
            for edge in self.edges:
                if len(edge) not in (2, 3):
                    raise InputError(f"Edge {edge} must be [j, i] or [j, i, weight]")
                rows.append((int(edge[0]) - 1, int(edge[1]) - 1, *edge[2:]))
            graph = Digraph.from_edges(n, rows, self.weight)
        else:
            path = self.file or Path()
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            graph = read_edge_list(path)
        if self.remove_edges:
            graph = graph.without_edges((j - 1, i - 1) for j, i in self.remove_edges)
        return graph


class InitialSpec(_Strict):
    positions: list[float]
    velocities: list[float] | None = None
    offsets: list[float] | None = None


class ScriptStep(_Strict):
    target: float | None = None
    u: float | None = None

    @model_validator(mode="after")
    def _one_value(self) -> "ScriptStep":
        if (self.target is None) == (self.u is None):
            raise ValueError("a script step needs exactly one of target or u")
        return self


class HoldSpec(_Strict):
    strategy: Literal["hold"]
    position: float
    omissive: bool = False


class OscillateSpec(_Strict):
    strategy: Literal["oscillate"]
    low: float
    high: float
    omissive: bool = False


class ScriptedSpec(_Strict):
    strategy: Literal["scripted"]
    table: dict[int, ScriptStep]
    omissive: bool = False


class NoiseSpec(_Strict):
    strategy: Literal["noise"]
    amplitude: float = Field(ge=0)
    seed: int = 0
    omissive: bool = False


StrategySpec = Annotated[
    HoldSpec | OscillateSpec | ScriptedSpec | NoiseSpec, Field(discriminator="strategy")
]


def build_strategy(spec: StrategySpec) -> Strategy:
    strategy: Strategy
    if isinstance(spec, HoldSpec):
        strategy = strategy_hold(spec.position)
    elif isinstance(spec, OscillateSpec):
        strategy = strategy_oscillate(spec.low, spec.high)
    elif isinstance(spec, ScriptedSpec):
        table = {
            step: ScriptEntry("u", entry.u) if entry.u is not None else ScriptEntry("target", entry.target or 0.0)
            for step, entry in spec.table.items()
        }
        strategy = strategy_scripted(table)
    else:
        strategy = strategy_noise(spec.amplitude, spec.seed)
    if spec.omissive:
        strategy = replace(strategy, omissive=True)  # type: ignore[type-var]
    return strategy


class AdversarySpec(_Strict):
    kind: AdversaryKind = AdversaryKind.F_TOTAL
    f: int | None = None
    agents: dict[int, StrategySpec] = Field(default_factory=dict)


class DelayRuleSpec(_Strict):
    kind: Literal["constant", "parity", "table"]
    value: int | None = None
    even: int | None = None
    odd: int | None = None
    edges: list[tuple[int, int]] | None = None
    entries: list[tuple[int, int, int, int]] | None = None

    def build(self) -> DelayRule:
        edges = None if self.edges is None else frozenset((j - 1, i - 1) for j, i in self.edges)
        if self.kind == "constant":
            if self.value is None:
                raise InputError("constant delay rule needs value")
            return ConstantDelay(self.value, edges)
        if self.kind == "parity":
            if self.even is None or self.odd is None:
                raise InputError("parity delay rule needs even and odd")
            return ParityDelay(self.even, self.odd, edges)
        table = {(j - 1, i - 1, k): delay for j, i, k, delay in self.entries or []}
        return TableDelay(table)


class UpdateRuleSpec(_Strict):
    kind: Literal["always", "periodic", "steps"]
    period: int | None = None
    phase: int = 0
    steps: list[int] | None = None
    agents: list[int] | None = None

    def build(self) -> UpdateRule:
        agents = None if self.agents is None else frozenset(agent - 1 for agent in self.agents)
        if self.kind == "always":
            return AlwaysUpdate(agents)
        if self.kind == "periodic":
            if self.period is None:
                raise InputError("periodic update rule needs period")
            return PeriodicUpdate(self.period, self.phase, agents)
        return StepsUpdate(frozenset(self.steps or []), agents)


class AsyncSpec(_Strict):
    tau: int = Field(default=0, ge=0)
    delays: list[DelayRuleSpec] = Field(default_factory=list)
    updates: list[UpdateRuleSpec] = Field(default_factory=list)
    history: list[list[float]] | None = None


class TopologySpec(_Strict):
    sequence: list[GraphSpec]
    window: int = Field(default=1, ge=1)


class ScenarioFile(_Strict):
    """On-disk scenario, schema version 1."""

    model_config = ConfigDict(populate_by_name=True)

    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = "scenario"
    mode: Mode = Mode.SYNC
    algorithm: Algorithm = Algorithm.DP_MSR
    f: int = Field(default=0, ge=0)
    horizon: int = Field(default=1000, ge=0)
    seed: int = 0
    params: ParamsSpec
    graph: GraphSpec
    initial: InitialSpec
    adversary: AdversarySpec = Field(default_factory=AdversarySpec)
    async_: AsyncSpec | None = Field(default=None, alias="async")
    topology: TopologySpec | None = None

    def to_scenario(self, base_dir: Path | None = None) -> "Scenario":
        """Build the runtime scenario with 0-indexed agents."""
        graph = self.graph.build(self.seed, base_dir)
        n = graph.n
        initial = self.initial
        for label, values in (
            ("positions", initial.positions),
            ("velocities", initial.velocities),
            ("offsets", initial.offsets),
        ):
            if values is not None and len(values) != n:
                raise InputError(f"initial.{label} has {len(values)} entries, graph has {n} agents")
        offsets = np.asarray(initial.offsets or [0.0] * n, dtype=float)
        state = NetworkState.create(
            np.asarray(initial.positions, dtype=float) - offsets, initial.velocities, offsets
        )

        for agent in self.adversary.agents:
            if not 1 <= agent <= n:
                raise InputError(f"Adversary agent {agent} is outside 1..{n}")
        malicious = frozenset(agent - 1 for agent in self.adversary.agents)
        bound = self.f if self.adversary.f is None else self.adversary.f
        model = AdversaryModel(self.adversary.kind, bound, malicious)
        strategies = {agent - 1: build_strategy(spec) for agent, spec in sorted(self.adversary.agents.items())}

        filter_f = 0 if self.algorithm == Algorithm.CONVENTIONAL else self.f
        params = SimParams(T=self.params.T, alpha=self.params.alpha, n=n, f=filter_f)

        delays = updates = None
        history = None
        if self.async_ is not None:
            delays = DelaySchedule(self.async_.tau, tuple(rule.build() for rule in self.async_.delays))
            updates = UpdateSchedule(tuple(rule.build() for rule in self.async_.updates))
            if self.async_.history is not None:
                history = [np.asarray(vector, dtype=float) - offsets for vector in self.async_.history]
        elif self.mode == Mode.ASYNC:
            delays, updates = DelaySchedule(), UpdateSchedule()

        topology = None
        if self.topology is not None:
            graphs = tuple(spec.build(self.seed, base_dir) for spec in self.topology.sequence)
            topology = GraphSequence(graphs, self.topology.window)
            if topology.n != n:
                raise InputError(f"Topology graphs have {topology.n} nodes, base graph has {n}")

        return Scenario(
            name=self.name,
            params=params,
            graph=graph,
            initial=state,
            adversary=model,
            strategies=strategies,
            mode=self.mode,
            algorithm=self.algorithm,
            horizon=self.horizon,
            delays=delays,
            updates=updates,
            history=history,
            topology=topology,
            seed=self.seed,
        )


@dataclass
class Scenario:
    """Everything one run needs, 0-indexed."""

    name: str
    params: SimParams
    graph: Digraph
    initial: NetworkState
    adversary: AdversaryModel
    strategies: dict[int, Strategy] = field(default_factory=dict)
    mode: Mode = Mode.SYNC
    algorithm: Algorithm = Algorithm.DP_MSR
    horizon: int = 1000
    delays: DelaySchedule | None = None
    updates: UpdateSchedule | None = None
    history: list[np.ndarray] | None = None
    topology: GraphSequence | None = None
    seed: int = 0

    @property
    def malicious(self) -> frozenset[int]:
        return self.adversary.malicious

    @property
    def normal(self) -> list[int]:
        return [i for i in range(self.graph.n) if i not in self.malicious]

    @property
    def tau(self) -> int:
        return self.delays.tau if self.delays is not None else 0

    def graph_at(self, k: int) -> Digraph:
        return self.topology.at(k) if self.topology is not None else self.graph


def load_scenario(data: dict[str, Any], base_dir: Path | None = None) -> Scenario:
    """Validate a scenario mapping and build the runtime scenario."""
    return ScenarioFile.model_validate(data).to_scenario(base_dir)


def validate_scenario(scenario: Scenario) -> list[str]:
    """Raise on hard errors; return (and log) warnings about weak guarantees."""
    warnings: list[str] = []
    require_valid_params(scenario.params)
    n = scenario.graph.n
    if scenario.params.n != n or scenario.initial.n != n:
        raise InputError(f"Scenario sizes disagree: graph {n}, params {scenario.params.n}, state {scenario.initial.n}")
    if not validate_model(scenario.graph, scenario.adversary):
        raise InputError(
            f"{len(scenario.malicious)} malicious agent(s) exceed the {scenario.adversary.kind} bound f={scenario.adversary.f}"
        )
    if set(scenario.strategies) != set(scenario.malicious):
        raise InputError("Every malicious agent needs exactly one strategy")
    if not scenario.normal:
        raise InputError("At least one agent must be normal")

    for agent, strategy in sorted(scenario.strategies.items()):
        if strategy.omissive:
            warnings.append(
                f"Agent {agent + 1} is omissive; its neighbours could filter with a smaller f"
            )

    f = scenario.params.f
    if scenario.algorithm == Algorithm.DP_MSR and n <= ENUMERATION_GUARD:
        conditions = check_conditions(scenario.graph, f)
        if scenario.mode == Mode.SYNC and not conditions.sync_necessary_sufficient:
            warnings.append(f"Graph is not ({f + 1},{f + 1})-robust; consensus is not guaranteed")
        if scenario.mode == Mode.ASYNC and not conditions.async_sufficient:
            warnings.append(f"Graph is not {2 * f + 1}-robust; asynchronous consensus is not guaranteed")

    if scenario.mode == Mode.ASYNC:
        delays = scenario.delays or DelaySchedule()
        updates = scenario.updates or UpdateSchedule()
        oldest = max_sample_age(scenario.graph_at, delays, updates, scenario.normal, scenario.horizon)
        if oldest > delays.tau:
            warnings.append(f"Held samples can reach age {oldest} > tau={delays.tau} between updates")
        topology = scenario.topology
        if topology is not None:
            if topology.window > delays.tau:
                warnings.append(f"Topology window h={topology.window} exceeds tau={delays.tau}")
            if topology.n <= ENUMERATION_GUARD and not is_jointly_robust(
                topology, 2 * f + 1, topology.window, cyclic=True
            ):
                warnings.append(f"Topology is not jointly {2 * f + 1}-robust over windows of {topology.window}")

    for message in warnings:
        logger.warning(message)
    return warnings


def run_scenario(scenario: Scenario) -> Trace:
    if scenario.mode == Mode.ASYNC:
        return run_async(scenario)
    return run_sync(scenario)
