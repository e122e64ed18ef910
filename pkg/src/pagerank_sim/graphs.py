"""Immutable graph model: generators, validation, and edge-list I/O.

Node ids are dense integers ``0..n-1`` so that hot loops can index numpy
arrays directly.  Undirected graphs store every edge in both adjacency
lists; a self-loop is stored once in its endpoint's list (degree
contribution 1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

__all__ = [
    "Graph",
    "GraphError",
    "GENERATOR_KINDS",
    "generate",
    "is_connected",
    "load_edge_list",
    "serialize",
    "validate",
]


class GraphError(ValueError):
    """Malformed graph input or invalid generator parameters."""


@dataclass(frozen=True, eq=False)
class Graph:
    """A fixed graph over dense integer node ids.

    ``adj[v]`` is a sorted, read-only int64 array.  For directed graphs it
    holds the out-neighbors of ``v``; for undirected graphs each edge
    appears in both endpoint lists.  Build instances through
    :meth:`from_edges`, :func:`generate`, or :func:`load_edge_list`; the
    raw constructor performs no checking (which is what lets tests build
    deliberately broken graphs for :func:`validate`).
    """

    n: int
    directed: bool
    adj: tuple[np.ndarray, ...]
    allow_multi: bool = False

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        *,
        directed: bool = False,
        allow_multi: bool = False,
    ) -> "Graph":
        if n <= 0:
            raise GraphError("graph must have at least one node")
        lists: list[list[int]] = [[] for _ in range(n)]
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) references a node id outside 0..{n - 1}")
            key = (u, v) if directed else (min(u, v), max(u, v))
            if key in seen and not allow_multi:
                raise GraphError(f"duplicate edge ({u}, {v})")
            seen.add(key)
            lists[u].append(v)
            if not directed and u != v:
                lists[v].append(u)
        return cls(n=n, directed=directed, adj=_freeze(lists), allow_multi=allow_multi)

    @property
    def out_degrees(self) -> np.ndarray:
        degs = np.array([len(a) for a in self.adj], dtype=np.int64)
        degs.setflags(write=False)
        return degs

    @property
    def in_degrees(self) -> np.ndarray:
        if not self.directed:
            return self.out_degrees
        counts = np.zeros(self.n, dtype=np.int64)
        for targets in self.adj:
            if len(targets):
                np.add.at(counts, targets, 1)
        counts.setflags(write=False)
        return counts

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.adj[v]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.adj[u]
        i = int(np.searchsorted(row, v))
        return i < len(row) and row[i] == v

    def edges(self) -> list[tuple[int, int]]:
        """Canonical edge list: every directed arc, or each undirected edge once (u <= v)."""
        out: list[tuple[int, int]] = []
        for u in range(self.n):
            for v in self.adj[u]:
                v = int(v)
                if self.directed or v >= u:
                    out.append((u, v))
        return out

    @property
    def edge_count(self) -> int:
        return len(self.edges())


def _freeze(lists: Sequence[Sequence[int]]) -> tuple[np.ndarray, ...]:
    frozen = []
    for row in lists:
        arr = np.array(sorted(int(x) for x in row), dtype=np.int64)
        arr.setflags(write=False)
        frozen.append(arr)
    return tuple(frozen)


def validate(graph: Graph) -> list[str]:
    """Check structural invariants; violations come back as data, not exceptions."""
    problems: list[str] = []
    for u in range(graph.n):
        row = graph.adj[u]
        if len(row) and not graph.allow_multi:
            dup = np.flatnonzero(np.diff(row) == 0)
            for i in dup:
                problems.append(f"duplicate edge ({u}, {int(row[i])})")
        if not graph.directed:
            for v in row:
                v = int(v)
                if v != u and not graph.has_edge(v, u):
                    problems.append(f"asymmetric edge ({u}, {v})")
    for v in range(graph.n):
        if len(graph.adj[v]) == 0:
            kind = "dangling" if graph.directed else "isolated"
            problems.append(f"{kind} node {v} (no outgoing edges)")
    return problems


def is_connected(graph: Graph) -> bool:
    """Weak connectivity (edge directions ignored)."""
    if graph.n <= 1:
        return True
    undirected: list[set[int]] = [set() for _ in range(graph.n)]
    for u in range(graph.n):
        for v in graph.adj[u]:
            undirected[u].add(int(v))
            undirected[int(v)].add(u)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in undirected[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == graph.n


# ---------------------------------------------------------------------------
# Edge-list format:  header "<directed|undirected> <n>", then one "u v" line
# per edge; "#" starts a comment, blank lines are skipped.
# ---------------------------------------------------------------------------

def load_edge_list(
    stream: TextIO,
    *,
    allow_multi: bool = False,
    patch_dangling: str | None = None,
) -> Graph:
    """Parse the plain-text edge-list format into a :class:`Graph`.

    ``patch_dangling="self-loop"`` adds a self-loop to every node that
    would otherwise have no outgoing edge instead of rejecting the input.
    Disconnected (but otherwise valid) graphs load with a warning.
    """
    if patch_dangling not in (None, "self-loop"):
        raise GraphError(f"unknown patch_dangling mode: {patch_dangling!r}")

    header = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    n = 0
    directed = False
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] not in ("directed", "undirected"):
                raise GraphError(f"line {lineno}: bad header {line!r}")
            try:
                n = int(parts[1])
            except ValueError:
                raise GraphError(f"line {lineno}: bad node count {parts[1]!r}") from None
            if n <= 0:
                raise GraphError(f"line {lineno}: empty graph (n={n})")
            directed = parts[0] == "directed"
            header = parts
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer node id in {line!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"line {lineno}: node id out of range 0..{n - 1} in {line!r}")
        key = (u, v) if directed else (min(u, v), max(u, v))
        if key in seen and not allow_multi:
            raise GraphError(f"line {lineno}: duplicate edge ({u}, {v})")
        seen.add(key)
        edges.append((u, v))
    if header is None:
        raise GraphError("empty input: missing header line")

    if patch_dangling == "self-loop":
        covered = {u for u, _ in edges}
        if not directed:
            covered |= {v for _, v in edges}
        for v in range(n):
            if v not in covered:
                edges.append((v, v))

    graph = Graph.from_edges(n, edges, directed=directed, allow_multi=allow_multi)
    for v in range(n):
        if len(graph.adj[v]) == 0:
            kind = "dangling" if directed else "isolated"
            raise GraphError(f"{kind} node {v} has no outgoing edges"
                             " (use patch_dangling='self-loop' to repair)")
    if not is_connected(graph):
        warnings.warn("graph is not connected", stacklevel=2)
    return graph


def serialize(graph: Graph) -> str:
    """Inverse of :func:`load_edge_list`: canonical text with sorted edges."""
    head = "directed" if graph.directed else "undirected"
    lines = [f"{head} {graph.n}"]
    for u, v in sorted(graph.edges()):
        lines.append(f"{u} {v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

GENERATOR_KINDS = ("ring", "complete", "star", "grid", "erdos-renyi", "directed-cycle")

_KIND_TAGS = {kind: i for i, kind in enumerate(GENERATOR_KINDS)}

_ER_RETRIES = 100


def generate(kind: str, n: int, seed: int = 0, *, p: float | None = None) -> Graph:
    """Build a named topology; a pure function of ``(kind, n, p, seed)``.

    ``erdos-renyi`` draws G(n, p) repeatedly (deterministically, advancing
    one seeded stream) until the sample is connected.
    """
    if kind not in _KIND_TAGS:
        raise GraphError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")
    if n < 1:
        raise GraphError("n must be >= 1")

    if kind == "ring":
        if n == 1:
            return Graph.from_edges(1, [(0, 0)])
        if n == 2:
            return Graph.from_edges(2, [(0, 1)])
        return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    if kind == "complete":
        if n < 2:
            raise GraphError("complete graph needs n >= 2")
        return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])

    if kind == "star":
        if n < 2:
            raise GraphError("star graph needs n >= 2")
        return Graph.from_edges(n, [(0, v) for v in range(1, n)])

    if kind == "grid":
        if n < 2:
            raise GraphError("grid graph needs n >= 2")
        cols = math.ceil(math.sqrt(n))
        edges = []
        for i in range(n):
            if (i % cols) != cols - 1 and i + 1 < n:
                edges.append((i, i + 1))
            if i + cols < n:
                edges.append((i, i + cols))
        return Graph.from_edges(n, edges)

    if kind == "directed-cycle":
        return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], directed=True)

    # erdos-renyi
    if p is None or not (0.0 < p <= 1.0):
        raise GraphError("erdos-renyi requires a probability p in (0, 1]")
    if n < 2:
        raise GraphError("erdos-renyi needs n >= 2")
    rng = np.random.default_rng(np.random.SeedSequence([_KIND_TAGS[kind], n, seed]))
    for _ in range(_ER_RETRIES):
        mask = rng.random((n, n)) < p
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if mask[u, v]]
        graph = Graph.from_edges(n, edges)
        if all(len(a) > 0 for a in graph.adj) and is_connected(graph):
            return graph
    raise GraphError(
        f"erdos-renyi(n={n}, p={p}) failed to produce a connected sample "
        f"in {_ER_RETRIES} attempts"
    )
