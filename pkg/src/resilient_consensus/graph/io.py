# ABOUTME: Edge-list reading/writing and DOT export for digraphs.
# ABOUTME: Files are 1-indexed: "n" on the first line, then "j i weight" per edge.

from pathlib import Path

import networkx as nx

from resilient_consensus.errors import InputError
from resilient_consensus.graph.digraph import Digraph


def parse_edge_list(text: str) -> Digraph:
    """Parse edge-list text; blank lines and '#' comments are ignored."""
    lines = [line.split("#", 1)[0].strip() for line in text.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        raise InputError("Edge list is empty")

    try:
        n = int(lines[0])
    except ValueError as e:
        raise InputError(f"First line must be the node count, got {lines[0]!r}") from e

    edges: list[tuple[int, int, float]] = []
    for number, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) not in (2, 3):
            raise InputError(f"Edge line {number} must be 'j i [weight]', got {line!r}")
        try:
            j, i = int(parts[0]) - 1, int(parts[1]) - 1
            weight = float(parts[2]) if len(parts) == 3 else 1.0 / n
        except ValueError as e:
            raise InputError(f"Edge line {number} is not numeric: {line!r}") from e
        edges.append((j, i, weight))
    return Digraph.from_edges(n, edges)


def read_edge_list(path: Path) -> Digraph:
    """Read a graph from an edge-list file."""
    return parse_edge_list(path.read_text())


def format_edge_list(g: Digraph) -> str:
    """Edge-list text with 17 significant digits per weight."""
    rows = [str(g.n)]
    for j, i in sorted(g.weights, key=lambda edge: (edge[1], edge[0])):
        rows.append(f"{j + 1} {i + 1} {g.weights[(j, i)]:.17g}")
    return "\n".join(rows) + "\n"


def write_edge_list(g: Digraph, path: Path) -> None:
    path.write_text(format_edge_list(g))


def to_dot(g: Digraph) -> str:
    """DOT source with 1-indexed agent labels and arcs in the direction of information flow."""
    flow = nx.relabel_nodes(g.to_networkx(), {node: node + 1 for node in range(g.n)})
    for _, _, data in flow.edges(data=True):
        data["label"] = f"{data.pop('weight'):.3g}"
    return str(nx.nx_pydot.to_pydot(flow).to_string())
