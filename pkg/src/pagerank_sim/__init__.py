"""Round-synchronous simulation of distributed random-walk score estimation.

The package models a message-passing network where every node runs the same
program, rounds advance in lockstep, and every envelope crossing an edge is
metered in bits.  Three estimators are provided, all built on the same walk
law (reset with probability epsilon, otherwise move to a uniform random
out-neighbour, every visit including the start counts):

- :func:`run_simple` forwards per-node walk counters until all walks die.
- :func:`run_improved` pre-generates short walk segments on undirected
  graphs, stitches them into full walks, then replays them backwards to
  credit every visited node.
- :func:`run_directed_local` runs the same stitching pipeline on directed
  graphs under an explicit per-node coupon budget.

Reference scores come from :mod:`pagerank_sim.oracle` (dense solve, power
iteration, or a sequential Monte Carlo walker sharing the walk law).
"""

__version__ = "0.1.0"

from .directed_local import LocalBudget, run_directed_local
from .engine import (
    EngineConfig,
    Envelope,
    NodeContext,
    NodeProgram,
    RoundMetrics,
    audit_congestion,
    counter_bits,
    header_bits,
    id_bits,
    merge_metrics,
    run,
)
from .graphs import GENERATOR_KINDS, Graph, GraphError, generate, is_connected, load_edge_list, serialize, validate
from .oracle import (
    EXACT_SOLVE_CAP,
    OracleError,
    OracleScores,
    exact_solve,
    naive_monte_carlo,
    power_iteration,
)
from .simple import TrajectoryReplay, count_budget_bits, run_simple
from .stitch import (
    Phase2Result,
    ShortWalkCoupon,
    ShortWalkTable,
    StitchError,
    WalkRecord,
    default_eta,
    default_lam,
    phase1,
    phase2,
    phase3,
    run_improved,
)
from .walks import (
    DEFAULT_C,
    ScoreVector,
    WalkParams,
    error_report,
    walk_length_cap,
    walks_per_node,
)

__all__ = [
    "DEFAULT_C",
    "EXACT_SOLVE_CAP",
    "EngineConfig",
    "Envelope",
    "GENERATOR_KINDS",
    "Graph",
    "GraphError",
    "LocalBudget",
    "NodeContext",
    "NodeProgram",
    "OracleError",
    "OracleScores",
    "Phase2Result",
    "RoundMetrics",
    "ScoreVector",
    "ShortWalkCoupon",
    "ShortWalkTable",
    "StitchError",
    "TrajectoryReplay",
    "WalkParams",
    "WalkRecord",
    "audit_congestion",
    "count_budget_bits",
    "counter_bits",
    "default_eta",
    "default_lam",
    "error_report",
    "exact_solve",
    "generate",
    "header_bits",
    "id_bits",
    "is_connected",
    "load_edge_list",
    "merge_metrics",
    "naive_monte_carlo",
    "phase1",
    "phase2",
    "phase3",
    "power_iteration",
    "run",
    "run_directed_local",
    "run_improved",
    "run_simple",
    "serialize",
    "validate",
    "walk_length_cap",
    "walks_per_node",
    "__version__",
]
