"""Coupon-count score estimation.

Every node starts K anonymous coupons (each the head of one random walk)
and counts its own K starting visits.  Each round a node holding m live
coupons terminates Binomial(m, epsilon) of them, splits the survivors
uniformly over its out-neighbors, and sends one count message per
neighbor that receives anything.  A node adds incoming counts to its
visit tally and forwards them next round.  Because coupons are anonymous,
per-edge traffic is a single integer regardless of how many walks cross
the edge, which is the whole point of the scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import engine as eng
from .engine import EngineConfig, Envelope, NodeContext, RoundMetrics, counter_bits
from .graphs import Graph
from .walks import ScoreVector, WalkParams, estimate

__all__ = [
    "CountMessage",
    "DecisionSource",
    "TrajectoryReplay",
    "count_budget_bits",
    "run_simple",
]


@dataclass(frozen=True)
class CountMessage:
    """Payload of one coupon-count envelope: how many walks just crossed."""

    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("empty count messages are never sent")


class DecisionSource(Protocol):
    """Where a node's per-round termination/split randomness comes from.

    The default draws from the node's own stream.  Tests substitute a
    replay source built from centrally generated trajectories to check
    exact equivalence with the sequential walk process.
    """

    def split(
        self,
        round_no: int,
        node: int,
        m: int,
        rng: np.random.Generator,
        out_degree: int,
    ) -> tuple[int, np.ndarray]:
        """Return (terminated, counts-per-neighbor-index); counts sum to m - terminated."""
        ...


class _RandomSplit:
    def __init__(self, epsilon: float, graph: Graph):
        self.epsilon = epsilon
        # uniform split probabilities, one array per distinct degree
        self._pvals: dict[int, np.ndarray] = {}

    def split(self, round_no, node, m, rng, out_degree):
        dead = int(rng.binomial(m, self.epsilon))
        alive = m - dead
        if alive == 0:
            return dead, np.zeros(out_degree, dtype=np.int64)
        pvals = self._pvals.get(out_degree)
        if pvals is None:
            pvals = np.full(out_degree, 1.0 / out_degree)
            self._pvals[out_degree] = pvals
        return dead, rng.multinomial(alive, pvals).astype(np.int64)


class TrajectoryReplay:
    """Decision source reconstructed from a sequential trajectory log.

    Walk t occupying node x after r - 1 moves is processed at x in round
    r; terminating there means its trajectory ends with length r - 1.
    Feeding these aggregates back into the distributed run must reproduce
    the sequential visit counts exactly.
    """

    def __init__(self, graph: Graph, trajectories: list[list[int]]):
        self.graph = graph
        # (round, node) -> [terminated, {neighbor: count}]
        table: dict[tuple[int, int], list] = {}
        for traj in trajectories:
            for i, here in enumerate(traj):
                rnd = i + 1
                key = (rnd, here)
                entry = table.setdefault(key, [0, {}])
                if i == len(traj) - 1:
                    entry[0] += 1
                else:
                    nxt = traj[i + 1]
                    entry[1][nxt] = entry[1].get(nxt, 0) + 1
        self._table = table

    def split(self, round_no, node, m, rng, out_degree):
        entry = self._table.get((round_no, node))
        if entry is None:
            raise AssertionError(f"replay has no record for node {node} in round {round_no}")
        dead, moves = entry
        counts = np.zeros(out_degree, dtype=np.int64)
        row = self.graph.adj[node]
        for nxt, cnt in moves.items():
            idx = int(np.searchsorted(row, nxt))
            counts[idx] = cnt
        if dead + int(counts.sum()) != m:
            raise AssertionError(
                f"replay mismatch at node {node}, round {round_no}: "
                f"{dead} + {counts.sum()} != {m}"
            )
        return dead, counts


class _SimpleProgram:
    skip_idle = True

    def __init__(self, graph: Graph, K: int, decisions: DecisionSource):
        self.graph = graph
        self.K = K
        self.decisions = decisions
        self.zeta = np.zeros(graph.n, dtype=np.int64)

    def init(self, node: int, ctx: NodeContext) -> bool:
        self.zeta[node] = self.K  # starting placements count as visits
        return True

    def on_round(self, node: int, inbox: list[Envelope], ctx: NodeContext) -> bool:
        arrived = 0
        for env in inbox:
            arrived += env.payload.count
        if ctx.round_no == 1:
            m = self.K
        else:
            m = arrived
            self.zeta[node] += arrived
        if m == 0:
            return False
        row = self.graph.adj[node]
        _, counts = self.decisions.split(ctx.round_no, node, m, ctx.rng, len(row))
        for idx in np.flatnonzero(counts):
            cnt = int(counts[idx])
            ctx.send_edge(int(row[idx]), CountMessage(cnt), counter_bits(cnt))
        return False


def count_budget_bits(n: int, K: int) -> int:
    """Audit budget for one count envelope: header + bits for the largest possible count.

    No count can exceed the n*K coupons in the system, so every run must
    fit ``header + max(8, ceil(log2(n*K + 1)))`` bits per edge direction
    per round; the 8-bit floor only matters below n*K = 255.
    """
    return eng.header_bits(n) + counter_bits(n * K)


def default_max_rounds(n: int, K: int, epsilon: float) -> int:
    # all n*K walks are dead by ceil(ln(n*K / p) / epsilon) with prob >= 1 - p
    return max(32, math.ceil(math.log(1e9 * max(n * K, 1)) / epsilon))


def run_simple(
    graph: Graph,
    params: WalkParams,
    seed: int,
    *,
    max_rounds: int | None = None,
    record_envelopes: bool = False,
    decisions: DecisionSource | None = None,
) -> tuple[ScoreVector, RoundMetrics]:
    """Run the coupon-count algorithm to quiescence.

    Returns the score vector and the traffic metrics.  If the round cap
    is exhausted first (vanishingly unlikely at the default cap), partial
    results come back with ``metrics.completed`` False.
    """
    if any(len(a) == 0 for a in graph.adj):
        raise ValueError("every node needs at least one outgoing edge")
    if max_rounds is None:
        max_rounds = default_max_rounds(graph.n, params.K, params.epsilon)
    program = _SimpleProgram(
        graph, params.K, decisions or _RandomSplit(params.epsilon, graph)
    )
    metrics = eng.run(
        graph,
        program,
        EngineConfig(seed=seed, max_rounds=max_rounds, record_envelopes=record_envelopes),
    )
    scores = estimate(program.zeta, graph.n, params.K, params.epsilon)
    return scores, metrics
