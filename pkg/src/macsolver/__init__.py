"""Constraint solver with maintained consistency search and a benchmark harness."""

from .model import (
    Constraint,
    DomainStore,
    InstanceError,
    Problem,
    check_tuple,
    dump_problem,
    load_problem,
    neighbors,
    seek_support,
)
from .propagation import (
    PropagationOutcome,
    RevisionQueue,
    initial_queue,
    propagate,
    update_queue,
)
from .heuristics import (
    HeuristicState,
    ImpactStore,
    ProbeConfig,
    VOHeuristic,
    WeightStore,
    parse_heuristic,
)
from .search import (
    ArithmeticRestarts,
    GeometricRestarts,
    SearchConfig,
    SearchOutcome,
    SearchStats,
    next_cutoff,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "ArithmeticRestarts",
    "Constraint",
    "DomainStore",
    "GeometricRestarts",
    "HeuristicState",
    "ImpactStore",
    "InstanceError",
    "ProbeConfig",
    "Problem",
    "PropagationOutcome",
    "RevisionQueue",
    "SearchConfig",
    "SearchOutcome",
    "SearchStats",
    "VOHeuristic",
    "WeightStore",
    "check_tuple",
    "dump_problem",
    "initial_queue",
    "load_problem",
    "neighbors",
    "next_cutoff",
    "parse_heuristic",
    "propagate",
    "seek_support",
    "solve",
    "update_queue",
]
