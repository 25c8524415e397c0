# ABOUTME: Exact (r,s)-robustness decisions by exhaustive enumeration of disjoint subset pairs.
# ABOUTME: Also joint robustness of graph sequences, condition checks and example search.

import itertools
import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from math import ceil
from typing import Any

import numpy as np

from resilient_consensus.errors import GraphSizeError, InputError
from resilient_consensus.graph.digraph import Digraph, Edge, GraphSequence, union_graph

logger = logging.getLogger(__name__)

ENUMERATION_GUARD = 20


@dataclass(frozen=True)
class RobustnessReport:
    """Outcome of an (r,s)-robustness check, with a violating pair when it fails."""

    r: int
    s: int
    holds: bool
    witness: tuple[frozenset[int], frozenset[int]] | None = None

    def to_dict(self) -> dict[str, Any]:
        """Serialise with 1-indexed witness sets."""
        witness = None
        if self.witness is not None:
            witness = [sorted(node + 1 for node in part) for part in self.witness]
        return {"r": self.r, "s": self.s, "holds": self.holds, "witness": witness}


@dataclass(frozen=True)
class ConditionReport:
    """Which resilient-consensus graph conditions hold for a given f."""

    f: int
    sync_necessary_sufficient: bool
    async_sufficient: bool
    async_necessary: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "f": self.f,
            f"sync ({self.f + 1},{self.f + 1})-robust": self.sync_necessary_sufficient,
            f"async {2 * self.f + 1}-robust (sufficient)": self.async_sufficient,
            f"async ({self.f + 1},{self.f + 1})-robust (necessary)": self.async_necessary,
        }


@dataclass
class SearchConstraints:
    """Extra requirements a searched example graph must meet."""

    required_edges: set[Edge] = field(default_factory=set)
    exact_in_degree: dict[int, int] = field(default_factory=dict)
    critical_edges: set[Edge] = field(default_factory=set)
    not_complete: bool = False
    minimal: bool = False
    predicates: list[Callable[[Digraph], bool]] = field(default_factory=list)


def _mask(nodes: Iterable[int]) -> int:
    mask = 0
    for node in nodes:
        mask |= 1 << node
    return mask


def _nodes(mask: int) -> frozenset[int]:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


def _reachable_mask(in_masks: tuple[int, ...], subset: int, r: int) -> int:
    outside = ~subset
    reachable = 0
    remaining = subset
    while remaining:
        low = remaining & -remaining
        i = low.bit_length() - 1
        if (in_masks[i] & outside).bit_count() >= r:
            reachable |= low
        remaining ^= low
    return reachable


def reachable_set(g: Digraph, subset: Iterable[int], r: int) -> frozenset[int]:
    """X^r_S: nodes of S with at least r in-neighbours outside S."""
    nodes = list(subset)
    if r < 0:
        raise InputError(f"r must be nonnegative, got {r}")
    for node in nodes:
        if not 0 <= node < g.n:
            raise InputError(f"Node {node} is outside 0..{g.n - 1}")
    return _nodes(_reachable_mask(g.in_masks, _mask(nodes), r))


def is_rs_robust(
    g: Digraph, r: int, s: int, max_nodes: int = ENUMERATION_GUARD
) -> RobustnessReport:
    """Decide (r,s)-robustness over every pair of nonempty disjoint node sets.

    Pairs are enumerated by assigning each node to S1, S2 or neither with base-3
    counters; a pair is visited once, with min(S1) < min(S2). The first violating
    pair in that order is returned as the witness.
    """
    if r < 0 or s < 1 or s > g.n:
        raise InputError(f"Need r >= 0 and 1 <= s <= n, got r={r}, s={s}, n={g.n}")
    if g.n > max_nodes:
        raise GraphSizeError(
            f"Exhaustive check over 3^{g.n} assignments refused; guard is {max_nodes} nodes"
        )

    in_masks = g.in_masks
    cache: dict[int, int] = {}

    def reach(subset: int) -> int:
        if subset not in cache:
            cache[subset] = _reachable_mask(in_masks, subset, r)
        return cache[subset]

    for assignment in itertools.product(range(3), repeat=g.n):
        first = second = 0
        for node, part in enumerate(assignment):
            if part == 1:
                first |= 1 << node
            elif part == 2:
                second |= 1 << node
        if not first or not second or (first & -first) > (second & -second):
            continue
        x_first, x_second = reach(first), reach(second)
        if x_first == first or x_second == second:
            continue
        if x_first.bit_count() + x_second.bit_count() >= s:
            continue
        return RobustnessReport(r, s, False, (_nodes(first), _nodes(second)))

    return RobustnessReport(r, s, True)


def is_r_robust(g: Digraph, r: int, max_nodes: int = ENUMERATION_GUARD) -> RobustnessReport:
    """r-robustness is (r,1)-robustness."""
    return is_rs_robust(g, r, 1, max_nodes)


def is_jointly_robust(seq: GraphSequence, r: int, h: int, cyclic: bool = False) -> bool:
    """True when the edge union over every window of h consecutive steps is r-robust.

    Windows run from k to k + h - 1 inside the sequence. With ``cyclic`` the
    sequence repeats and windows also wrap around its end.
    """
    if h < 1:
        raise InputError(f"Window length must be at least 1, got {h}")
    if not cyclic and h > len(seq):
        raise InputError(f"Window length {h} exceeds the sequence length {len(seq)}")
    starts = range(len(seq)) if cyclic else range(len(seq) - h + 1)
    for start in starts:
        window = union_graph([seq.at(start + offset) for offset in range(h)])
        if not is_r_robust(window, r).holds:
            logger.debug(f"Window starting at {start} is not {r}-robust")
            return False
    return True


def max_robustness_profile(
    g: Digraph, max_nodes: int = ENUMERATION_GUARD
) -> dict[int, int]:
    """For each s in 1..n, the largest r with (r,s)-robustness."""
    profile: dict[int, int] = {}
    cap = ceil(g.n / 2)
    for s in range(1, g.n + 1):
        best = 0
        for r in range(1, cap + 1):
            if not is_rs_robust(g, r, s, max_nodes).holds:
                break
            best = r
        profile[s] = best
    return profile


def check_conditions(g: Digraph, f: int) -> ConditionReport:
    """Graph conditions for resilient consensus against f malicious agents."""
    if f < 0:
        raise InputError(f"f must be nonnegative, got {f}")
    s = min(f + 1, g.n)
    pair = is_rs_robust(g, f + 1, s).holds
    return ConditionReport(
        f=f,
        sync_necessary_sufficient=pair,
        async_sufficient=is_r_robust(g, 2 * f + 1).holds,
        async_necessary=pair,
    )


def _meets(g: Digraph, r: int, s: int, constraints: SearchConstraints) -> bool:
    if constraints.not_complete and g.is_complete():
        return False
    if any(edge not in g.weights for edge in constraints.required_edges):
        return False
    if any(g.in_degree(i) != d for i, d in constraints.exact_in_degree.items()):
        return False
    if not is_rs_robust(g, r, s).holds or is_r_robust(g, r + 1).holds:
        return False
    for edge in constraints.critical_edges:
        if is_rs_robust(g.without_edges([edge]), r, s).holds:
            return False
    if constraints.minimal:
        for edge in g.weights:
            if is_rs_robust(g.without_edges([edge]), r, s).holds:
                return False
    return all(predicate(g) for predicate in constraints.predicates)


def find_rs_robust_example(
    n: int,
    r: int,
    s: int,
    constraints: SearchConstraints | None = None,
    seed: int = 0,
    budget: int = 64,
) -> Digraph | None:
    """Search for an n-node (r,s)-robust graph that is not (r+1)-robust.

    Each attempt starts from the complete graph and removes edges in a random
    order, keeping a removal only while (r,s)-robustness survives. The first
    graph along the way that meets every constraint is returned.
    """
    if n > 8:
        raise InputError(f"Example search is limited to n <= 8, got {n}")
    if n < 2 or r >= n or s >= n:
        return None

    constraints = constraints or SearchConstraints()
    weight = 1.0 / n
    all_edges = [(j, i) for i in range(n) for j in range(n) if j != i]
    rng = np.random.default_rng(seed)

    for attempt in range(budget):
        current = set(all_edges)
        graph = Digraph.from_edges(n, current, weight)
        if _meets(graph, r, s, constraints):
            return graph
        for index in rng.permutation(len(all_edges)):
            edge = all_edges[int(index)]
            if edge in constraints.required_edges:
                continue
            trial = Digraph.from_edges(n, current - {edge}, weight)
            if not is_rs_robust(trial, r, s).holds:
                continue
            current.discard(edge)
            if _meets(trial, r, s, constraints):
                logger.info(f"Found example after {attempt + 1} attempt(s)")
                return trial
    logger.info(f"No example within {budget} attempts")
    return None
