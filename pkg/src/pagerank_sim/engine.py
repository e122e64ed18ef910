"""Round-synchronous message-passing engine with bit-level accounting.

Execution model
---------------
Nodes run in lockstep rounds.  A message sent while processing round ``r``
is delivered at the start of round ``r + 1``; nothing is delivered within
the round it was sent.  Each node's inbox is sorted by ``(src, channel,
send sequence)`` so a run is a pure function of ``(graph, program, seed)``.

Two channels exist.  ``"edge"`` messages must follow a graph edge
(respecting direction on directed graphs) and their bits are accounted
per (edge, direction, round).  ``"direct"`` messages may target any node;
they are metered separately and never count against an edge budget, but
still take one round of latency.

The engine meters traffic, it does not throttle it: congestion is checked
after the fact with :func:`audit_congestion` against a caller-chosen
budget.  Every envelope costs a fixed header of ``2 * ceil(log2 n)`` bits
(source and destination ids) plus the payload bits declared by the
sender.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Protocol

import numpy as np

from .graphs import Graph

__all__ = [
    "EngineConfig",
    "EngineError",
    "Envelope",
    "NodeContext",
    "NodeProgram",
    "RoundMetrics",
    "audit_congestion",
    "counter_bits",
    "header_bits",
    "id_bits",
    "merge_metrics",
    "run",
]


class EngineError(RuntimeError):
    """A program broke the communication contract (bad send, bad bits)."""


def header_bits(n: int) -> int:
    """Fixed per-envelope header: source and destination ids."""
    return 2 * id_bits(n)


def id_bits(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0


def counter_bits(value: int) -> int:
    """Cost of one integer counter: ceil(log2(value + 1)), floored at 8 bits."""
    if value < 0:
        raise ValueError("counters are non-negative")
    return max(8, math.ceil(math.log2(value + 1)))


@dataclass(frozen=True)
class Envelope:
    """One delivered message, as seen by the receiving handler."""

    src: int
    dst: int
    channel: str  # "edge" or "direct"
    payload_bits: int
    payload: object
    seq: int = 0  # global send order, used only for deterministic delivery


@dataclass
class RoundMetrics:
    """Per-run traffic accounting.

    ``edge_bits`` and ``direct_bits`` accumulate bits per
    ``(round, src, dst)`` key; the CSV export flattens both.  ``counters``
    is a free-form spot for algorithm-level tallies (phase round counts,
    exhaustion events, and the like) so they travel with the run.
    """

    n: int
    rounds_elapsed: int = 0
    message_count: int = 0
    total_bits: int = 0
    max_edge_bits_per_round: int = 0
    completed: bool = True
    edge_bits: dict[tuple[int, int, int], int] = field(default_factory=dict)
    direct_bits: dict[tuple[int, int, int], int] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)
    envelope_log: list[tuple[int, int, int, str, int, object]] | None = None

    def record(self, env: Envelope, round_no: int) -> None:
        key = (round_no, env.src, env.dst)
        book = self.edge_bits if env.channel == "edge" else self.direct_bits
        book[key] = book.get(key, 0) + env.payload_bits + header_bits(self.n)
        if env.channel == "edge" and book[key] > self.max_edge_bits_per_round:
            self.max_edge_bits_per_round = book[key]
        self.message_count += 1
        self.total_bits += env.payload_bits + header_bits(self.n)
        if self.envelope_log is not None:
            self.envelope_log.append(
                (round_no, env.src, env.dst, env.channel, env.payload_bits, env.payload)
            )

    @property
    def direct_bits_total(self) -> int:
        return sum(self.direct_bits.values())

    def direct_bits_by_round(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for (rnd, _, _), bits in self.direct_bits.items():
            out[rnd] = out.get(rnd, 0) + bits
        return out

    def summary(self) -> dict:
        return {
            "rounds": self.rounds_elapsed,
            "max_edge_bits_per_round": self.max_edge_bits_per_round,
            "direct_bits_total": self.direct_bits_total,
            "message_count": self.message_count,
            "total_bits": self.total_bits,
            "completed": self.completed,
            "counters": dict(sorted(self.counters.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def csv_rows(self) -> Iterator[tuple[int, int, int, str, int]]:
        """Flattened per-round traffic: (round, src, dst, channel, bits)."""
        rows = [(rnd, src, dst, "edge", bits) for (rnd, src, dst), bits in self.edge_bits.items()]
        rows += [(rnd, src, dst, "direct", bits) for (rnd, src, dst), bits in self.direct_bits.items()]
        rows.sort()
        return iter(rows)

    def write_csv(self, fileobj) -> None:
        fileobj.write("round,src,dst,channel,bits\n")
        for rnd, src, dst, channel, bits in self.csv_rows():
            fileobj.write(f"{rnd},{src},{dst},{channel},{bits}\n")


def merge_metrics(parts: list[RoundMetrics], n: int) -> RoundMetrics:
    """Concatenate phase metrics; round indices are offset so they stay unique."""
    merged = RoundMetrics(n=n)
    offset = 0
    for part in parts:
        for (rnd, src, dst), bits in part.edge_bits.items():
            merged.edge_bits[(rnd + offset, src, dst)] = bits
        for (rnd, src, dst), bits in part.direct_bits.items():
            merged.direct_bits[(rnd + offset, src, dst)] = bits
        if part.envelope_log:
            if merged.envelope_log is None:
                merged.envelope_log = []
            merged.envelope_log.extend(
                (rnd + offset, src, dst, ch, bits, payload)
                for rnd, src, dst, ch, bits, payload in part.envelope_log
            )
        merged.rounds_elapsed += part.rounds_elapsed
        merged.message_count += part.message_count
        merged.total_bits += part.total_bits
        merged.max_edge_bits_per_round = max(
            merged.max_edge_bits_per_round, part.max_edge_bits_per_round
        )
        merged.completed = merged.completed and part.completed
        for key, val in part.counters.items():
            merged.counters[key] = merged.counters.get(key, 0) + val
        offset += part.rounds_elapsed
    return merged


def audit_congestion(
    metrics: RoundMetrics, budget_bits: int
) -> list[tuple[int, int, int, int]]:
    """Edge-channel entries whose per-(edge, direction, round) bits exceed the budget.

    Direct-channel traffic is exempt; it is metered separately.  Returns
    ``(round, src, dst, bits)`` tuples, sorted.  An empty list means the
    run fit the budget.
    """
    bad = [
        (rnd, src, dst, bits)
        for (rnd, src, dst), bits in metrics.edge_bits.items()
        if bits > budget_bits
    ]
    bad.sort()
    return bad


@dataclass
class EngineConfig:
    seed: int
    max_rounds: int = 10_000
    record_envelopes: bool = False


class NodeContext:
    """Per-node handle the engine passes to handlers.

    Exposes the node's private random stream (derived from the root seed
    and the node id) and the two send primitives.  Sends are only legal
    inside ``on_round``.
    """

    __slots__ = ("node", "rng", "graph", "round_no", "_engine")

    def __init__(self, node: int, rng: np.random.Generator, graph: Graph, engine: "_Engine"):
        self.node = node
        self.rng = rng
        self.graph = graph
        self.round_no = 0
        self._engine = engine

    def out_neighbors(self) -> np.ndarray:
        return self.graph.adj[self.node]

    def send_edge(self, dst: int, payload: object, payload_bits: int) -> None:
        self._engine.post(self.node, dst, "edge", payload, payload_bits)

    def send_direct(self, dst: int, payload: object, payload_bits: int) -> None:
        self._engine.post(self.node, dst, "direct", payload, payload_bits)


class NodeProgram(Protocol):
    """What the engine expects of an algorithm.

    ``init`` runs once before round 1; it may draw randomness and set up
    state but must not send.  ``on_round`` handles the round's inbox and
    returns True while the node still holds live work of its own (the
    engine keeps running while any node is live or any message is in
    flight).  Programs that never need to act on an empty inbox can set
    ``skip_idle = True`` to let the engine skip those calls.
    """

    skip_idle: bool

    def init(self, node: int, ctx: NodeContext) -> bool | None: ...

    def on_round(self, node: int, inbox: list[Envelope], ctx: NodeContext) -> bool | None: ...


class _Engine:
    def __init__(self, graph: Graph, config: EngineConfig):
        self.graph = graph
        self.config = config
        self.metrics = RoundMetrics(
            n=graph.n, envelope_log=[] if config.record_envelopes else None
        )
        self.outbox: list[Envelope] = []
        self.round_no = 0
        self._seq = 0
        self._sending_node: int | None = None

    def post(self, src: int, dst: int, channel: str, payload: object, payload_bits: int) -> None:
        if self._sending_node is None:
            raise EngineError("sends are only allowed inside on_round")
        if src != self._sending_node:
            raise EngineError("a handler may only send from its own node")
        if not (0 <= dst < self.graph.n):
            raise EngineError(f"destination {dst} out of range")
        if not isinstance(payload_bits, (int, np.integer)) or payload_bits <= 0:
            raise EngineError(f"payload_bits must be a positive integer, got {payload_bits!r}")
        if channel == "edge" and not self.graph.has_edge(src, dst):
            raise EngineError(
                f"edge-channel send {src}->{dst} does not follow an edge of the graph"
            )
        env = Envelope(src, dst, channel, int(payload_bits), payload, self._seq)
        self._seq += 1
        self.outbox.append(env)
        self.metrics.record(env, self.round_no)


def run(graph: Graph, program: NodeProgram, config: EngineConfig) -> RoundMetrics:
    """Drive ``program`` to quiescence (or ``max_rounds``) and return metrics.

    Quiescence is the conjunction of every node reporting no live work and
    no messages in flight.  If ``max_rounds`` is hit first, the run stops,
    ``metrics.completed`` is False, and whatever state the program holds
    is left as-is for the caller to inspect.
    """
    engine = _Engine(graph, config)
    n = graph.n
    rngs = [
        np.random.default_rng(np.random.SeedSequence([config.seed & 0x7FFFFFFF, v]))
        for v in range(n)
    ]
    ctxs = [NodeContext(v, rngs[v], graph, engine) for v in range(n)]
    live = np.zeros(n, dtype=bool)
    for v in range(n):
        live[v] = bool(program.init(v, ctxs[v]))

    skip_idle = bool(getattr(program, "skip_idle", False))
    pending: list[Envelope] = []
    completed = True
    while True:
        if engine.round_no >= config.max_rounds:
            completed = False
            break
        if engine.round_no > 0 and not pending and not live.any():
            break
        engine.round_no += 1
        inboxes: dict[int, list[Envelope]] = {}
        for env in pending:
            inboxes.setdefault(env.dst, []).append(env)
        for box in inboxes.values():
            box.sort(key=lambda e: (e.src, e.channel, e.seq))
        empty: list[Envelope] = []
        for v in range(n):
            box = inboxes.get(v, empty)
            if skip_idle and engine.round_no > 1 and not box and not live[v]:
                continue
            ctx = ctxs[v]
            ctx.round_no = engine.round_no
            engine._sending_node = v
            live[v] = bool(program.on_round(v, box, ctx))
            engine._sending_node = None
        pending = engine.outbox
        engine.outbox = []
        engine.metrics.rounds_elapsed = engine.round_no

    engine.metrics.completed = completed
    return engine.metrics
