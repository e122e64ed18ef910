"""Directed variant under an unbounded-bandwidth (LOCAL-style) model.

Directed graphs break the coupon-count trick: a node cannot aggregate
anonymous counts without knowing who may send to it, and reverse traces
may run against edge direction.  This variant drops the per-edge bit
budget instead: phase 1 forwards every coupon individually with its id
(still one hop per round, so exactly ``lam`` walking rounds plus the
landing callbacks), and phases 2 and 3 are the same stitching machinery,
with reverse tokens carried on the direct channel.

Each node creates ``R = ceil(scale * c * n * log^2 n / epsilon)`` coupons.
At ``scale = 1`` that is enough for every stitch the system could ever
ask of one node (all ``n * K * ceil(ell / lam)`` of them), so exhaustion
is impossible rather than merely unlikely.  The scale knob trades that
guarantee for desk-size memory; the exhaustion fallback keeps results
exact either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine as eng
from .engine import RoundMetrics
from .graphs import Graph
from .walks import ScoreVector, WalkParams, estimate, log_of
from .stitch import derive_seed, phase1, phase2, phase3

__all__ = ["LocalBudget", "run_directed_local"]


@dataclass(frozen=True)
class LocalBudget:
    """Per-node coupon budget and short-walk length for the directed variant."""

    walks_per_node: int
    lam: int

    def __post_init__(self):
        if self.walks_per_node < 1:
            raise ValueError("budget must provide at least one coupon per node")
        if self.lam < 1:
            raise ValueError("lam must be >= 1")

    @classmethod
    def for_graph(
        cls,
        n: int,
        epsilon: float,
        *,
        c: float = 20.0,
        log_base: str = "base2",
        scale: float = 1.0,
    ) -> "LocalBudget":
        if n < 2:
            raise ValueError("budget derivation needs n >= 2")
        if scale <= 0:
            raise ValueError("scale must be positive")
        logn = log_of(n, log_base)
        r = math.ceil(scale * c * n * logn * logn / epsilon)
        lam = max(1, math.ceil(math.sqrt(logn / epsilon)))
        return cls(walks_per_node=max(1, r), lam=lam)

    def covers(self, n: int, K: int, ell: int) -> bool:
        """True when no node can run out even if every stitch lands on it."""
        return self.walks_per_node >= n * K * math.ceil(ell / self.lam)


def run_directed_local(
    graph: Graph,
    params: WalkParams,
    seed: int,
    *,
    budget: LocalBudget | None = None,
    budget_scale: float = 1.0,
    record_envelopes: bool = False,
) -> tuple[ScoreVector, RoundMetrics]:
    """Score a directed graph with stitched walks and no bandwidth cap."""
    if not graph.directed:
        raise ValueError("run_directed_local expects a directed graph; "
                         "use run_improved for undirected inputs")
    if any(len(a) == 0 for a in graph.adj):
        raise ValueError("every node needs outdegree >= 1")
    if budget is None:
        budget = LocalBudget.for_graph(
            graph.n, params.epsilon, c=params.c, log_base=params.log_base, scale=budget_scale
        )
    table, m1 = phase1(
        graph,
        budget.lam,
        budget.walks_per_node,
        params.epsilon,
        derive_seed(seed, 1),
        record_envelopes=record_envelopes,
    )
    res2 = phase2(
        graph, table, params, derive_seed(seed, 2), record_envelopes=record_envelopes
    )
    zeta, m3 = phase3(
        graph, table, res2, derive_seed(seed, 3), record_envelopes=record_envelopes
    )
    metrics = eng.merge_metrics([m1, res2.metrics, m3], graph.n)
    metrics.counters["budget_walks_per_node"] = budget.walks_per_node
    metrics.counters["budget_lam"] = budget.lam
    scores = estimate(zeta, graph.n, params.K, params.epsilon)
    return scores, metrics
