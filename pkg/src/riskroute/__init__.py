"""Fault-tolerant greedy routing on DAGs with independent edge failures."""

from riskroute.estimator import GreedyRouter, check_world_matrix
from riskroute.graph import (
    Dag,
    Edge,
    GraphError,
    MissingRiskError,
    edge_neighbors,
    load_graph,
    parse_dot,
    parse_graph,
    reverse_topological_edge_order,
    serialize_graph,
    validate_dag,
)
from riskroute.poly import (
    PiecewiseAccumulation,
    Polynomial,
    accumulate_symbolic,
    find_crossovers,
    poly_add,
    poly_eval,
    poly_mul,
    poly_por,
    sweep,
)
from riskroute.risk import (
    Accumulation,
    accumulate,
    accumulate_bat,
    accumulate_eagle,
    por,
    remainder,
    selection_probability,
)
from riskroute.sim import (
    EnumerationTooLarge,
    TrialSummary,
    WalkTrace,
    World,
    enumerate_exact,
    greedy_walk,
    monte_carlo,
    sample_world,
    static_most_reliable_path,
)

__all__ = [
    "Accumulation",
    "Dag",
    "Edge",
    "EnumerationTooLarge",
    "GraphError",
    "GreedyRouter",
    "MissingRiskError",
    "PiecewiseAccumulation",
    "Polynomial",
    "TrialSummary",
    "WalkTrace",
    "World",
    "accumulate",
    "accumulate_bat",
    "accumulate_eagle",
    "accumulate_symbolic",
    "check_world_matrix",
    "edge_neighbors",
    "enumerate_exact",
    "find_crossovers",
    "greedy_walk",
    "load_graph",
    "monte_carlo",
    "parse_dot",
    "parse_graph",
    "poly_add",
    "poly_eval",
    "poly_mul",
    "poly_por",
    "por",
    "remainder",
    "reverse_topological_edge_order",
    "sample_world",
    "selection_probability",
    "serialize_graph",
    "static_most_reliable_path",
    "sweep",
    "validate_dag",
]
