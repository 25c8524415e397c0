# ABOUTME: Generators for the graph families used by scenarios and tests.
# ABOUTME: Complete, ring, random, the four-group blocking construction and the five-agent example.

import networkx as nx

from resilient_consensus.errors import InputError
from resilient_consensus.graph.digraph import Digraph

# In-neighbours of the shipped five-agent example, 0-indexed.
FIVE_AGENT_IN_NEIGHBORS: dict[int, tuple[int, ...]] = {
    0: (2, 3, 4),
    1: (0, 2, 3),
    2: (0, 1, 3),
    3: (0, 1, 2),
    4: (0, 1, 3),
}


def build_complete(n: int, weight: float | None = None) -> Digraph:
    """All ordered pairs, weights 1/n unless given."""
    if n <= 1:
        raise InputError(f"A complete graph needs n > 1, got {n}")
    edges = [(j, i) for i in range(n) for j in range(n) if j != i]
    return Digraph.from_edges(n, edges, weight)


def build_ring(n: int, bidirectional: bool = True, weight: float | None = None) -> Digraph:
    """Cycle 0 -> 1 -> ... -> n-1 -> 0, with reverse arcs when bidirectional."""
    if n <= 2:
        raise InputError(f"A ring needs n > 2, got {n}")
    edges = {(k, (k + 1) % n) for k in range(n)}
    if bidirectional:
        edges |= {(i, j) for j, i in edges}
    return Digraph.from_edges(n, sorted(edges), weight)


def build_random(n: int, p: float, seed: int = 0, weight: float | None = None) -> Digraph:
    """Erdos-Renyi digraph with arc probability p."""
    if n <= 1:
        raise InputError(f"A random graph needs n > 1, got {n}")
    if not 0 <= p <= 1:
        raise InputError(f"Arc probability must lie in [0, 1], got {p}")
    flow = nx.gnp_random_graph(n, p, seed=seed, directed=True)
    return Digraph.from_edges(n, sorted(flow.edges()), weight)


def proposition_groups(f: int) -> dict[str, list[int]]:
    """Node indices of groups G1 (4f nodes) and G2, G3, G4 (f nodes each)."""
    if f < 1:
        raise InputError(f"The blocking construction needs f >= 1, got {f}")
    return {
        "G1": list(range(0, 4 * f)),
        "G2": list(range(4 * f, 5 * f)),
        "G3": list(range(5 * f, 6 * f)),
        "G4": list(range(6 * f, 7 * f)),
    }


def build_proposition_graph(
    f: int, g4_links: int | None = None, weight: float | None = None
) -> Digraph:
    """Four internally complete groups wired so that G3 and G4 can be split apart.

    Each G2 node hears the 2f lowest-index G1 nodes, each G3 node hears f of G1
    and all of G2, and each G4 node hears ``g4_links`` of G1 (default all 4f)
    and all of G2. Lower-index nodes are always chosen first.
    """
    groups = proposition_groups(f)
    g1, g2, g3, g4 = groups["G1"], groups["G2"], groups["G3"], groups["G4"]
    g4_links = 4 * f if g4_links is None else g4_links
    if not 0 <= g4_links <= 4 * f:
        raise InputError(f"g4_links must lie in 0..{4 * f}, got {g4_links}")

    edges: set[tuple[int, int]] = set()
    for group in (g1, g2, g3, g4):
        edges |= {(j, i) for i in group for j in group if j != i}
    for i in g2:
        edges |= {(j, i) for j in g1[: 2 * f]}
    for i in g3:
        edges |= {(j, i) for j in g1[:f]}
        edges |= {(j, i) for j in g2}
    for i in g4:
        edges |= {(j, i) for j in g1[:g4_links]}
        edges |= {(j, i) for j in g2}
    return Digraph.from_edges(7 * f, sorted(edges), weight)


def build_five_agent_example(weight: float = 1.0 / 3.0) -> Digraph:
    """Five agents, every in-degree three: (2,2)-robust, not 3-robust, edge (1,4) critical."""
    edges = [(j, i) for i, nbrs in FIVE_AGENT_IN_NEIGHBORS.items() for j in nbrs]
    return Digraph.from_edges(5, edges, weight)
