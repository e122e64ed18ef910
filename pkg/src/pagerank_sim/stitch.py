"""Long walks assembled from pre-generated short walks.

Phase 1 floats a bundle of short coupons from every node; each coupon
walks at most ``lam`` steps (resetting early with probability epsilon per
step), leaving a trace entry at every node it passes so the path can be
re-walked backwards later.  When a coupon lands, the landing node tells
the coupon's source where it ended up.

Phase 2 builds the actual length-``ell`` walks.  Each of the K tokens a
node starts is extended by repeatedly consuming one unused coupon of the
token's current holder: the holder marks the coupon used (it is never
sampled again), adds the coupon's hop count to the walk, and hands the
token to the coupon's destination.  A coupon that ended in a reset ends
the long walk right there.  Once the walk is within ``lam`` of the cap it
finishes with plain step-by-step walking, whose visits are counted on
arrival.  A holder with no coupons left walks the token naively for up to
``lam`` steps and then tries stitching again (counted as an exhaustion
event); this keeps the walk law exact, it just costs extra rounds.

Phase 3 converts used coupons into visit counts: a reverse token starts
at each used coupon's destination and follows the stored trace entries
back, incrementing the tally at every node it occupies except the
coupon's own source.  Together with one start-visit per token and the
naive visits already counted in phase 2, the final tally equals exactly
the number of occurrences of each node in the assembled trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine as eng
from .engine import EngineConfig, Envelope, NodeContext, RoundMetrics, counter_bits, id_bits
from .graphs import Graph
from .walks import ScoreVector, WalkParams, estimate, log_of

__all__ = [
    "Phase2Result",
    "ShortWalkCoupon",
    "ShortWalkTable",
    "StitchError",
    "WalkRecord",
    "default_eta",
    "default_lam",
    "phase1",
    "phase2",
    "phase3",
    "run_improved",
]


class StitchError(RuntimeError):
    """Inconsistent stitch state (missing trace entry, bad phase input)."""


def default_lam(n: int, log_base: str = "base2") -> int:
    """Short-walk length: ceil(sqrt(log n))."""
    return max(1, math.ceil(math.sqrt(log_of(n, log_base))))


def default_eta(n: int, epsilon: float, log_base: str = "base2") -> int:
    """Coupons per unit degree: ceil(log^3 n / epsilon)."""
    return max(1, math.ceil(log_of(n, log_base) ** 3 / epsilon))


@dataclass(frozen=True)
class ShortWalkCoupon:
    """Read-only view of one short walk: identity, landing, and usage."""

    source: int
    seq: int
    target_len: int
    hops: int
    reset: bool
    destination: int
    used: bool

    @property
    def coupon_id(self) -> tuple[int, int]:
        return (self.source, self.seq)

    @property
    def status(self) -> str:
        return "landed-reset" if self.reset else "landed-full"


class ShortWalkTable:
    """Everything phase 1 leaves behind, partitioned the way nodes hold it.

    Per source: destination, hop count, and reset flag for each coupon it
    created (filled in by landing callbacks), plus a used flag maintained
    by phase 2.  Per visited node: trace entries mapping ``(source, seq,
    step)`` to the predecessor the coupon arrived from, which is what the
    reverse walk follows.
    """

    def __init__(self, graph: Graph, lam: int, counts: np.ndarray):
        self.n = graph.n
        self.lam = lam
        self.counts = counts
        self.dest = [np.full(int(c), -1, dtype=np.int64) for c in counts]
        self.hops = [np.zeros(int(c), dtype=np.int64) for c in counts]
        self.reset = [np.zeros(int(c), dtype=bool) for c in counts]
        self.used = [np.zeros(int(c), dtype=bool) for c in counts]
        self.traces: list[dict[tuple[int, int, int], int]] = [dict() for _ in range(graph.n)]
        self.trace_entries = 0

    def coupon(self, source: int, seq: int) -> ShortWalkCoupon:
        return ShortWalkCoupon(
            source=source,
            seq=seq,
            target_len=self.lam,
            hops=int(self.hops[source][seq]),
            reset=bool(self.reset[source][seq]),
            destination=int(self.dest[source][seq]),
            used=bool(self.used[source][seq]),
        )

    def path(self, source: int, seq: int) -> list[int]:
        """Reconstruct the coupon's walk from its trace entries: [source, ..., destination]."""
        node = int(self.dest[source][seq])
        out = [node]
        for step in range(int(self.hops[source][seq]), 0, -1):
            pred = self.traces[node].get((source, seq, step))
            if pred is None:
                raise StitchError(f"missing trace entry for coupon ({source}, {seq}) step {step}")
            out.append(pred)
            node = pred
        out.reverse()
        return out

    def unused_remaining(self, v: int) -> int:
        return int((~self.used[v]).sum())


# ---------------------------------------------------------------------------
# Phase 1: float the coupons
# ---------------------------------------------------------------------------

class _Phase1Program:
    skip_idle = True

    def __init__(self, graph, lam, epsilon, table, record_traces, seq_bits, hop_bits):
        self.graph = graph
        self.lam = lam
        self.epsilon = epsilon
        self.table = table
        self.record_traces = record_traces
        self.coupon_bits = id_bits(graph.n) + seq_bits + hop_bits
        self.cb_bits = seq_bits + hop_bits + 1

    def init(self, node, ctx):
        return self.table.counts[node] > 0

    def _land(self, at, callbacks, srcs, seqs, hops, resets):
        for s, q, h, r in zip(srcs.tolist(), seqs.tolist(), hops.tolist(), resets.tolist()):
            if s == at:
                # landing at the owner: written locally, no callback envelope
                self.table.dest[s][q] = at
                self.table.hops[s][q] = h
                self.table.reset[s][q] = r
            else:
                callbacks.setdefault(s, []).append((q, h, r))

    def on_round(self, node, inbox, ctx):
        table = self.table
        batches = []
        for env in inbox:
            tag = env.payload[0]
            if tag == "cb":
                _, seqs, hops, resets = env.payload
                dest = env.src
                for q, h, r in zip(seqs, hops, resets):
                    table.dest[node][q] = dest
                    table.hops[node][q] = h
                    table.reset[node][q] = r
                continue
            _, srcs, seqs, hops = env.payload
            if self.record_traces:
                tr = table.traces[node]
                pred = env.src
                for s, q, h in zip(srcs.tolist(), seqs.tolist(), hops.tolist()):
                    tr[(s, q, h)] = pred
                table.trace_entries += len(srcs)
            batches.append((srcs, seqs, hops))
        if ctx.round_no == 1 and table.counts[node] > 0:
            k = int(table.counts[node])
            batches.append(
                (
                    np.full(k, node, dtype=np.int64),
                    np.arange(k, dtype=np.int64),
                    np.zeros(k, dtype=np.int64),
                )
            )
        if not batches:
            return False

        srcs = np.concatenate([b[0] for b in batches])
        seqs = np.concatenate([b[1] for b in batches])
        hops = np.concatenate([b[2] for b in batches])

        callbacks: dict[int, list] = {}
        done = hops >= self.lam  # walked the full target length
        if done.any():
            self._land(node, callbacks, srcs[done], seqs[done],
                       hops[done], np.zeros(int(done.sum()), dtype=bool))
        alive = ~done
        srcs, seqs, hops = srcs[alive], seqs[alive], hops[alive]
        if len(srcs):
            dying = ctx.rng.random(len(srcs)) < self.epsilon
            if dying.any():
                self._land(node, callbacks, srcs[dying], seqs[dying],
                           hops[dying], np.ones(int(dying.sum()), dtype=bool))
            moving = ~dying
            srcs, seqs, hops = srcs[moving], seqs[moving], hops[moving]
        if len(srcs):
            row = self.graph.adj[node]
            pick = ctx.rng.integers(0, len(row), size=len(srcs))
            order = np.argsort(pick, kind="stable")
            pick = pick[order]
            srcs, seqs, hops = srcs[order], seqs[order], hops[order] + 1
            bounds = np.flatnonzero(np.diff(pick)) + 1
            for chunk_srcs, chunk_seqs, chunk_hops, chunk_pick in zip(
                np.split(srcs, bounds),
                np.split(seqs, bounds),
                np.split(hops, bounds),
                np.split(pick, bounds),
            ):
                ctx.send_edge(
                    int(row[chunk_pick[0]]),
                    ("c", chunk_srcs, chunk_seqs, chunk_hops),
                    len(chunk_srcs) * self.coupon_bits,
                )
        for source, items in callbacks.items():
            seq_list = [q for q, _, _ in items]
            hop_list = [h for _, h, _ in items]
            reset_list = [r for _, _, r in items]
            ctx.send_direct(
                source, ("cb", seq_list, hop_list, reset_list), len(items) * self.cb_bits
            )
        return False


def phase1(
    graph: Graph,
    lam: int,
    counts: np.ndarray | int,
    epsilon: float,
    seed: int,
    *,
    record_traces: bool = True,
    record_envelopes: bool = False,
) -> tuple[ShortWalkTable, RoundMetrics]:
    """Generate the short walks and their trace structure.

    ``counts`` gives the number of coupons each node creates (a scalar is
    broadcast).  Lands every coupon in ``lam`` walking rounds plus the
    landing callbacks; with ``lam = 0`` every coupon lands at its source
    immediately.
    """
    if lam < 0:
        raise StitchError("lam must be >= 0")
    if not (0.0 <= epsilon <= 1.0):
        raise StitchError("epsilon must lie in [0, 1]")
    counts = np.broadcast_to(np.asarray(counts, dtype=np.int64), (graph.n,)).copy()
    if (counts < 0).any():
        raise StitchError("coupon counts cannot be negative")
    if any(len(a) == 0 for a in graph.adj):
        raise StitchError("every node needs at least one outgoing edge")
    table = ShortWalkTable(graph, lam, counts)
    seq_bits = counter_bits(int(counts.max())) if counts.max() > 0 else 8
    hop_bits = counter_bits(max(lam, 1))
    program = _Phase1Program(graph, lam, epsilon, table, record_traces, seq_bits, hop_bits)
    metrics = eng.run(
        graph,
        program,
        EngineConfig(seed=seed, max_rounds=lam + 8, record_envelopes=record_envelopes),
    )
    if not metrics.completed:
        raise StitchError("phase 1 failed to settle; this should be impossible")
    metrics.counters["phase1_rounds"] = metrics.rounds_elapsed
    metrics.counters["coupons_created"] = int(counts.sum())
    metrics.counters["trace_entries"] = table.trace_entries
    return table, metrics


# ---------------------------------------------------------------------------
# Phase 2: stitch tokens through the coupons
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class WalkRecord:
    """One long walk: which coupons it consumed and how it ended.

    ``segments`` interleaves ``("coupon", source, seq)`` entries with
    ``("steps", [nodes...])`` stretches walked naively (tail and
    exhaustion fallback).  ``connectors`` lists the stitch points in
    order, starting with the walk's source.
    """

    source: int
    idx: int
    connectors: list[int] = field(default_factory=list)
    segments: list[tuple] = field(default_factory=list)
    endpoint: int = -1
    length: int = 0
    terminated: str = ""

    @property
    def stitches(self) -> int:
        return sum(1 for s in self.segments if s[0] == "coupon")


@dataclass
class Phase2Result:
    records: list[WalkRecord]
    zeta: np.ndarray  # naive-step visits only; phase 3 adds the rest
    exhaustion_events: int
    truncated: int
    K: int
    metrics: RoundMetrics


class _Phase2Program:
    skip_idle = True

    def __init__(self, graph, table, K, ell, epsilon):
        if table.lam < 1:
            raise StitchError("phase 2 requires short walks of length >= 1")
        self.graph = graph
        self.table = table
        self.K = K
        self.ell = ell
        self.lam = table.lam
        self.epsilon = epsilon
        self.zeta = np.zeros(graph.n, dtype=np.int64)
        self.records = [
            WalkRecord(source=v, idx=i, connectors=[v])
            for v in range(graph.n)
            for i in range(K)
        ]
        self.exhaustion_events = 0
        self.truncated = 0
        self.perm: list[np.ndarray] = []
        self.local: list[list] = []  # tokens held for the next round at each node
        self.ptr = np.zeros(graph.n, dtype=np.int64)
        self.token_bits = (
            id_bits(graph.n) + counter_bits(K) + counter_bits(ell) + counter_bits(self.lam) + 2
        )

    def init(self, node, ctx):
        # consuming a pre-shuffled order is exactly uniform sampling
        # without replacement, one coupon at a time
        self.perm.append(ctx.rng.permutation(int(self.table.counts[node])))
        self.local.append([])
        return self.K > 0

    def _die(self, rec, endpoint, completed, why):
        rec.endpoint = int(endpoint)
        rec.length = int(completed)
        rec.terminated = why
        if not rec.connectors or rec.connectors[-1] != endpoint:
            rec.connectors.append(int(endpoint))

    def _move(self, v, source, idx, completed, naive, resume_left, ctx, out_stitch, out_naive):
        """Advance one token by exactly one move: a coupon jump or a single step.

        Mode switches (entering the tail, falling back on pool exhaustion,
        retrying the pool once the fallback budget is spent) take no time of
        their own; the move they lead to happens in the same round.
        """
        table = self.table
        rec = self.records[source * self.K + idx]
        while True:
            if not naive:
                if self.ell <= self.lam or completed > self.ell - self.lam:
                    naive, resume_left = True, -1  # tail: walk out the remainder
                    continue
                if self.ptr[v] >= len(self.perm[v]):
                    self.exhaustion_events += 1
                    naive, resume_left = True, self.lam  # fallback stretch, then retry
                    continue
                seq = int(self.perm[v][self.ptr[v]])
                self.ptr[v] += 1
                table.used[v][seq] = True
                rec.segments.append(("coupon", v, seq))
                dest = int(table.dest[v][seq])
                completed += int(table.hops[v][seq])
                rec.connectors.append(dest)
                if table.reset[v][seq]:
                    self._die(rec, dest, completed, "reset")
                    return
                if completed >= self.ell:
                    self.truncated += 1
                    self._die(rec, dest, completed, "capped")
                    return
                if dest == v:
                    # lands back where it started: nothing crosses the
                    # network, but the jump still takes its round
                    self.local[v].append((source, idx, completed, False, 0))
                    return
                out_stitch.setdefault(dest, []).append((source, idx, completed, 0))
                return
            # naive mode: tail (resume_left < 0) or exhaustion fallback
            if completed >= self.ell:
                self.truncated += 1
                self._die(rec, v, completed, "capped")
                return
            if resume_left == 0:
                naive = False
                continue
            if ctx.rng.random() < self.epsilon:
                self._die(rec, v, completed, "reset")
                return
            row = self.graph.adj[v]
            nxt = int(row[ctx.rng.integers(len(row))])
            completed += 1
            if rec.segments and rec.segments[-1][0] == "steps":
                rec.segments[-1][1].append(nxt)
            else:
                rec.segments.append(("steps", [nxt]))
            out_naive.setdefault(nxt, []).append(
                (source, idx, completed, resume_left - 1 if resume_left > 0 else -1)
            )
            return

    def on_round(self, node, inbox, ctx):
        out_stitch: dict[int, list] = {}
        out_naive: dict[int, list] = {}
        queued, self.local[node] = self.local[node], []
        if ctx.round_no == 1:
            for i in range(self.K):
                self._move(node, node, i, 0, False, 0, ctx, out_stitch, out_naive)
        for env in inbox:
            tag, tokens = env.payload
            if tag == "tn":
                self.zeta[node] += len(tokens)  # naive arrivals are visits
            for source, idx, completed, resume_left in tokens:
                # a fallback token arriving with no budget left retries stitching
                naive = tag == "tn" and resume_left != 0
                self._move(
                    node, source, idx, completed, naive, resume_left, ctx, out_stitch, out_naive
                )
        for source, idx, completed, naive, resume_left in queued:
            self._move(node, source, idx, completed, naive, resume_left, ctx, out_stitch, out_naive)
        for dest, tokens in out_stitch.items():
            ctx.send_direct(dest, ("ts", tokens), len(tokens) * self.token_bits)
        for dest, tokens in out_naive.items():
            ctx.send_edge(dest, ("tn", tokens), len(tokens) * self.token_bits)
        return bool(self.local[node])


def phase2(
    graph: Graph,
    table: ShortWalkTable,
    params: WalkParams,
    seed: int,
    *,
    record_envelopes: bool = False,
    max_rounds: int | None = None,
) -> Phase2Result:
    """Assemble K long walks per node by consuming the phase-1 coupons."""
    if any(len(a) == 0 for a in graph.adj):
        raise StitchError("every node needs at least one outgoing edge")
    program = _Phase2Program(graph, table, params.K, params.ell, params.epsilon)
    if max_rounds is None:
        # a walk takes at most ell hops plus one round per stitch
        max_rounds = 2 * params.ell + 16
    metrics = eng.run(
        graph,
        program,
        EngineConfig(seed=seed, max_rounds=max_rounds, record_envelopes=record_envelopes),
    )
    if not metrics.completed:
        raise StitchError(f"phase 2 did not finish within {max_rounds} rounds")
    metrics.counters["phase2_rounds"] = metrics.rounds_elapsed
    metrics.counters["exhaustion_events"] = program.exhaustion_events
    metrics.counters["truncated_walks"] = program.truncated
    metrics.counters["coupons_used"] = int(sum(u.sum() for u in table.used))
    return Phase2Result(
        records=program.records,
        zeta=program.zeta,
        exhaustion_events=program.exhaustion_events,
        truncated=program.truncated,
        K=params.K,
        metrics=metrics,
    )


# ---------------------------------------------------------------------------
# Phase 3: reverse-walk the used coupons into visit counts
# ---------------------------------------------------------------------------

class _Phase3Program:
    skip_idle = True

    def __init__(self, graph, table, zeta, walks_per_source):
        self.graph = graph
        self.table = table
        self.zeta = zeta
        self.walks_per_source = walks_per_source
        self.reverse_hops = 0
        self.token_bits = id_bits(graph.n) + counter_bits(int(table.counts.max()) if len(table.counts) else 1) + counter_bits(max(table.lam, 1))
        self.initial: list[list[tuple[int, int, int]]] = [[] for _ in range(graph.n)]
        tokens = 0
        for s in range(graph.n):
            used = np.flatnonzero(table.used[s])
            for q in used:
                h = int(table.hops[s][q])
                if h >= 1:
                    self.initial[int(table.dest[s][q])].append((s, int(q), h))
                    tokens += 1
        self.reverse_tokens = tokens
        self.channel_edge = not graph.directed

    def init(self, node, ctx):
        self.zeta[node] += self.walks_per_source[node]  # one start visit per walk
        return bool(self.initial[node])

    def on_round(self, node, inbox, ctx):
        tokens: list[tuple[int, int, int]] = []
        if ctx.round_no == 1 and self.initial[node]:
            tokens.extend(self.initial[node])
            self.initial[node] = []
        for env in inbox:
            tokens.extend(env.payload[1])
        if not tokens:
            return False
        out: dict[int, list] = {}
        traces = self.table.traces[node]
        for s, q, step in tokens:
            self.zeta[node] += 1
            self.reverse_hops += 1
            if step == 1:
                continue  # predecessor is the coupon's source; stop before it
            pred = traces.get((s, q, step))
            if pred is None:
                raise StitchError(
                    f"missing trace entry for coupon ({s}, {q}) at step {step} on node {node}"
                )
            out.setdefault(pred, []).append((s, q, step - 1))
        for pred, toks in out.items():
            payload = ("r", toks)
            bits = len(toks) * self.token_bits
            if self.channel_edge:
                ctx.send_edge(pred, payload, bits)
            else:
                ctx.send_direct(pred, payload, bits)
        return False


def phase3(
    graph: Graph,
    table: ShortWalkTable,
    result: Phase2Result,
    seed: int,
    *,
    record_envelopes: bool = False,
) -> tuple[np.ndarray, RoundMetrics]:
    """Fold used coupons back into per-node visit counts.

    Returns the complete tally: phase-2 naive visits, one start visit per
    long walk, and one visit per node occupied by a reverse trace (the
    coupon's own source excepted, since the walk was already there before
    the segment began).  Reverse tokens move along stored predecessor
    entries: over graph edges on undirected graphs, over the direct
    channel on directed graphs where the reverse direction need not be an
    edge.
    """
    walks_per_source = np.zeros(graph.n, dtype=np.int64)
    for rec in result.records:
        walks_per_source[rec.source] += 1
    program = _Phase3Program(graph, table, result.zeta.copy(), walks_per_source)
    metrics = eng.run(
        graph,
        program,
        EngineConfig(
            seed=seed, max_rounds=table.lam + 8, record_envelopes=record_envelopes
        ),
    )
    if not metrics.completed:
        raise StitchError("phase 3 failed to settle within lam rounds")
    metrics.counters["phase3_rounds"] = metrics.rounds_elapsed
    metrics.counters["reverse_tokens"] = program.reverse_tokens
    metrics.counters["reverse_hops"] = program.reverse_hops
    return program.zeta, metrics


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

def derive_seed(seed: int, tag: int) -> int:
    """Stable sub-seed for one phase of a composite run."""
    ss = np.random.SeedSequence([seed & 0x7FFFFFFF, tag])
    return int(ss.generate_state(1, np.uint64)[0] & 0x7FFFFFFF)


def run_improved(
    graph: Graph,
    params: WalkParams,
    seed: int,
    *,
    lam: int | None = None,
    eta: int | None = None,
    record_envelopes: bool = False,
) -> tuple[ScoreVector, RoundMetrics]:
    """Full three-phase run on an undirected graph.

    Each node creates ``degree * eta`` coupons of length ``lam`` (defaults
    ``ceil(sqrt(log n))`` and ``ceil(log^3 n / epsilon)``), then starts
    ``params.K`` tokens stitched up to length ``params.ell``.
    """
    if graph.directed:
        raise ValueError("the stitching algorithm runs on undirected graphs; "
                         "see run_directed_local for the directed variant")
    if any(len(a) == 0 for a in graph.adj):
        raise ValueError("every node needs at least one edge")
    if lam is None:
        lam = default_lam(graph.n, params.log_base)
    if eta is None:
        eta = default_eta(graph.n, params.epsilon, params.log_base)
    counts = graph.out_degrees * eta
    table, m1 = phase1(
        graph, lam, counts, params.epsilon, derive_seed(seed, 1),
        record_envelopes=record_envelopes,
    )
    res2 = phase2(
        graph, table, params, derive_seed(seed, 2), record_envelopes=record_envelopes
    )
    zeta, m3 = phase3(
        graph, table, res2, derive_seed(seed, 3), record_envelopes=record_envelopes
    )
    metrics = eng.merge_metrics([m1, res2.metrics, m3], graph.n)
    scores = estimate(zeta, graph.n, params.K, params.epsilon)
    return scores, metrics
