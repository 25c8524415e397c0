# ABOUTME: Weighted directed graph used as the communication topology of the network.
# ABOUTME: Edge (j, i) means agent i receives from agent j with weight a_ij.

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx
import numpy as np

from resilient_consensus.errors import InputError

WEIGHT_TOLERANCE = 1e-12

Edge = tuple[int, int]


@dataclass(frozen=True)
class Digraph:
    """Directed graph on nodes 0..n-1 with weights a_ij in [gamma, 1) and row sums <= 1."""

    n: int
    weights: dict[Edge, float] = field(default_factory=dict)
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.n <= 1:
            raise InputError(f"A graph needs at least two nodes, got n={self.n}")

        for (j, i), weight in self.weights.items():
            if not (0 <= j < self.n and 0 <= i < self.n):
                raise InputError(f"Edge ({j}, {i}) references a node outside 0..{self.n - 1}")
            if j == i:
                raise InputError(f"Self-loop on node {i} is not allowed")
            if not 0 < weight < 1:
                raise InputError(f"Weight of edge ({j}, {i}) must lie in (0, 1), got {weight}")

        if self.gamma is None:
            lowest = min(self.weights.values(), default=1.0 / self.n)
            object.__setattr__(self, "gamma", lowest)
        elif self.gamma <= 0:
            raise InputError(f"gamma must be positive, got {self.gamma}")
        elif any(w < self.gamma - WEIGHT_TOLERANCE for w in self.weights.values()):
            raise InputError(f"Some weight is below gamma={self.gamma}")

        for i in range(self.n):
            total = sum(self.weights[(j, i)] for j in self.in_neighbors(i))
            if total > 1 + WEIGHT_TOLERANCE:
                raise InputError(f"In-weights of node {i} sum to {total} > 1")

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Sequence[float]],
        weight: float | None = None,
    ) -> "Digraph":
        """Build from (j, i) or (j, i, weight) tuples; missing weights default to 1/n."""
        default = weight if weight is not None else 1.0 / n
        weights: dict[Edge, float] = {}
        for edge in edges:
            j, i = int(edge[0]), int(edge[1])
            weights[(j, i)] = float(edge[2]) if len(edge) > 2 else default
        return cls(n=n, weights=weights)

    @property
    def edges(self) -> frozenset[Edge]:
        return frozenset(self.weights)

    @cached_property
    def _in_lists(self) -> tuple[tuple[int, ...], ...]:
        lists: list[list[int]] = [[] for _ in range(self.n)]
        for j, i in self.weights:
            lists[i].append(j)
        return tuple(tuple(sorted(nbrs)) for nbrs in lists)

    @cached_property
    def in_masks(self) -> tuple[int, ...]:
        """Bitmask of in-neighbours per node, bit j set when (j, i) is an edge."""
        return tuple(sum(1 << j for j in nbrs) for nbrs in self._in_lists)

    def in_neighbors(self, i: int) -> tuple[int, ...]:
        """In-neighbours of node i in ascending order."""
        return self._in_lists[i]

    def in_degree(self, i: int) -> int:
        return len(self._in_lists[i])

    def weight(self, j: int, i: int) -> float:
        """a_ij, zero when (j, i) is not an edge."""
        return self.weights.get((j, i), 0.0)

    def is_complete(self) -> bool:
        return len(self.weights) == self.n * (self.n - 1)

    def adjacency(self) -> np.ndarray:
        """Dense matrix with A[i, j] = a_ij."""
        matrix = np.zeros((self.n, self.n))
        for (j, i), weight in self.weights.items():
            matrix[i, j] = weight
        return matrix

    def without_edges(self, edges: Iterable[Edge]) -> "Digraph":
        """Copy with the given edges removed; unknown edges raise."""
        weights = dict(self.weights)
        for edge in edges:
            if edge not in weights:
                raise InputError(f"Edge {edge} is not in the graph")
            del weights[edge]
        return Digraph(n=self.n, weights=weights, gamma=self.gamma)

    def restricted_to(self, kept: dict[int, Iterable[int]]) -> "Digraph":
        """Subgraph keeping, for each listed receiver, only the given in-neighbours.

        Receivers missing from ``kept`` keep all of their in-edges.
        """
        weights: dict[Edge, float] = {}
        for (j, i), weight in self.weights.items():
            if i not in kept or j in kept[i]:
                weights[(j, i)] = weight
        return Digraph(n=self.n, weights=weights, gamma=self.gamma)

    def to_networkx(self) -> nx.DiGraph:
        """Information-flow view: an arc j -> i for every edge (j, i)."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_weighted_edges_from((j, i, w) for (j, i), w in self.weights.items())
        return graph


@dataclass(frozen=True)
class GraphSequence:
    """Time-indexed graphs over a common node set, checked in windows of h steps."""

    graphs: tuple[Digraph, ...]
    window: int = 1

    def __post_init__(self) -> None:
        if not self.graphs:
            raise InputError("A graph sequence needs at least one graph")
        sizes = {g.n for g in self.graphs}
        if len(sizes) != 1:
            raise InputError(f"Graphs in a sequence must share n, got sizes {sorted(sizes)}")
        if self.window < 1:
            raise InputError(f"Window length h must be at least 1, got {self.window}")

    @property
    def n(self) -> int:
        return self.graphs[0].n

    def __len__(self) -> int:
        return len(self.graphs)

    def at(self, k: int) -> Digraph:
        """Graph in force at step k, cycling through the sequence."""
        return self.graphs[k % len(self.graphs)]


def laplacian(g: Digraph) -> np.ndarray:
    """L with l_ii = sum_j a_ij and l_ij = -a_ij."""
    adjacency = g.adjacency()
    return np.diag(adjacency.sum(axis=1)) - adjacency


def has_directed_spanning_tree(g: Digraph) -> bool:
    """True when some node reaches every other node along directed edges."""
    flow = g.to_networkx()
    # Only a root of the condensation's unique source component can reach everything.
    condensed = nx.condensation(flow)
    sources = [node for node, degree in condensed.in_degree() if degree == 0]
    if len(sources) != 1:
        return False
    root = next(iter(condensed.nodes[sources[0]]["members"]))
    return len(nx.descendants(flow, root)) == g.n - 1


def union_graph(graphs: Sequence[Digraph]) -> Digraph:
    """Edge union over graphs sharing n, reweighted to 1/n so row sums stay below one."""
    if not graphs:
        raise InputError("Cannot take the union of no graphs")
    n = graphs[0].n
    merged = nx.compose_all([g.to_networkx() for g in graphs])
    return Digraph.from_edges(n, merged.edges(), weight=1.0 / n)
