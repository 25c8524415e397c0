# ABOUTME: Directed communication graphs and their robustness analysis.
# ABOUTME: Re-exports the digraph type, robustness checks, generators and file I/O.

from resilient_consensus.graph.digraph import (
    Digraph,
    Edge,
    GraphSequence,
    has_directed_spanning_tree,
    laplacian,
    union_graph,
)
from resilient_consensus.graph.generators import (
    build_complete,
    build_five_agent_example,
    build_proposition_graph,
    build_random,
    build_ring,
    proposition_groups,
)
from resilient_consensus.graph.io import (
    format_edge_list,
    parse_edge_list,
    read_edge_list,
    to_dot,
    write_edge_list,
)
from resilient_consensus.graph.robustness import (
    ENUMERATION_GUARD,
    ConditionReport,
    RobustnessReport,
    SearchConstraints,
    check_conditions,
    find_rs_robust_example,
    is_jointly_robust,
    is_r_robust,
    is_rs_robust,
    max_robustness_profile,
    reachable_set,
)

__all__ = [
    "ENUMERATION_GUARD",
    "ConditionReport",
    "Digraph",
    "Edge",
    "GraphSequence",
    "RobustnessReport",
    "SearchConstraints",
    "build_complete",
    "build_five_agent_example",
    "build_proposition_graph",
    "build_random",
    "build_ring",
    "check_conditions",
    "find_rs_robust_example",
    "format_edge_list",
    "has_directed_spanning_tree",
    "is_jointly_robust",
    "is_r_robust",
    "is_rs_robust",
    "laplacian",
    "max_robustness_profile",
    "parse_edge_list",
    "proposition_groups",
    "reachable_set",
    "read_edge_list",
    "to_dot",
    "union_graph",
    "write_edge_list",
]
