"""Centralized reference computations the simulators are checked against.

All three oracles share the same transition law.  With reset probability
``epsilon`` and ``Q`` the uniform out-neighbor matrix (``Q[i, j] = 1/outdeg(i)``
for each edge ``i -> j``), the score vector is the stationary row vector of

    P = (epsilon / n) * J + (1 - epsilon) * Q

equivalently the unique solution of ``pi = epsilon/n + (1 - epsilon) * pi Q``.
Every node needs at least one outgoing edge, otherwise Q has a zero row
and the fixed point above does not describe the process.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import walks
from .graphs import Graph

__all__ = [
    "OracleError",
    "OracleScores",
    "exact_solve",
    "naive_monte_carlo",
    "power_iteration",
]

EXACT_SOLVE_CAP = 2000


class OracleError(RuntimeError):
    """Numeric trouble: non-convergence or an unusable graph."""


@dataclass(frozen=True)
class OracleScores:
    """A reference score vector plus provenance.

    Parameters
    ----------
    pi : ndarray
        Stationary scores, summing to 1.
    method : str
        "power" or "exact".
    residual : float
        L1 self-consistency residual ``||pi - pi P||_1`` at termination.
    epsilon : float
        Reset probability the scores were computed for.
    iterations : int or None
        Iterations used (power iteration only).
    residual_history : tuple of float
        Per-iteration L1 change, monotone under the (1 - epsilon)
        contraction; empty for the direct solver.
    """

    pi: np.ndarray
    method: str
    residual: float
    epsilon: float
    iterations: int | None = None
    residual_history: tuple[float, ...] = field(default_factory=tuple)


def _check_graph(graph: Graph) -> None:
    for v in range(graph.n):
        if len(graph.adj[v]) == 0:
            raise OracleError(f"node {v} has no outgoing edges; scores are undefined")


def _q_transpose(graph: Graph) -> sp.csr_matrix:
    """Q^T as CSR so that (pi Q) can be computed as Q^T @ pi."""
    rows, cols, vals = [], [], []
    for u in range(graph.n):
        targets = graph.adj[u]
        w = 1.0 / len(targets)
        for v in targets:
            rows.append(int(v))
            cols.append(u)
            vals.append(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(graph.n, graph.n))


def power_iteration(
    graph: Graph,
    epsilon: float,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> OracleScores:
    """Iterate ``x <- epsilon/n + (1 - epsilon) x Q`` until the L1 change < tol.

    Starts from the uniform vector.  The map is a contraction with factor
    ``1 - epsilon`` in L1, so the residual history decays geometrically
    and non-convergence within ``max_iter`` signals a real problem.
    """
    if not (0.0 < epsilon < 1.0):
        raise OracleError("epsilon must lie strictly between 0 and 1")
    _check_graph(graph)
    n = graph.n
    qt = _q_transpose(graph)
    x = np.full(n, 1.0 / n)
    history: list[float] = []
    for it in range(1, max_iter + 1):
        x_new = epsilon / n + (1.0 - epsilon) * (qt @ x)
        change = float(np.abs(x_new - x).sum())
        history.append(change)
        x = x_new
        if change < tol:
            residual = float(np.abs(x - (epsilon / n + (1.0 - epsilon) * (qt @ x))).sum())
            x.setflags(write=False)
            return OracleScores(
                pi=x,
                method="power",
                residual=residual,
                epsilon=epsilon,
                iterations=it,
                residual_history=tuple(history),
            )
    raise OracleError(f"power iteration did not reach tol={tol} in {max_iter} iterations")


def exact_solve(graph: Graph, epsilon: float, cap: int = EXACT_SOLVE_CAP) -> OracleScores:
    """Solve the dense linear system ``pi (I - (1 - epsilon) Q) = epsilon/n * 1``.

    Intended for small instances; refuses graphs above ``cap`` nodes where
    the O(n^3) solve stops being a sensible reference.
    """
    if not (0.0 < epsilon < 1.0):
        raise OracleError("epsilon must lie strictly between 0 and 1")
    if graph.n > cap:
        raise OracleError(f"exact_solve capped at n <= {cap}, got n = {graph.n}")
    _check_graph(graph)
    n = graph.n
    qt = _q_transpose(graph).toarray()
    a = np.eye(n) - (1.0 - epsilon) * qt
    b = np.full(n, epsilon / n)
    pi = np.linalg.solve(a, b)
    residual = float(np.abs(pi - (epsilon / n + (1.0 - epsilon) * (qt @ pi))).sum())
    pi.setflags(write=False)
    return OracleScores(pi=pi, method="exact", residual=residual, epsilon=epsilon)


def naive_monte_carlo(
    graph: Graph,
    epsilon: float,
    K: int,
    seed: int,
    *,
    count_starts: bool = True,
    max_len: int | None = None,
) -> tuple[walks.ScoreVector, list[list[int]]]:
    """Centralized walk simulation: K walks from every node, one at a time.

    Returns the score vector plus the full trajectory log (one node list
    per walk, starting position included), which is what lets tests replay
    decisions into the distributed implementations.  ``max_len`` caps each
    walk's move count when comparing against length-capped runs; the
    default (None) lets walks run to their first reset.
    """
    if not (0.0 < epsilon <= 1.0):
        raise OracleError("epsilon must lie in (0, 1] for the walk process")
    if K < 1:
        raise OracleError("K must be >= 1")
    _check_graph(graph)
    n = graph.n
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0x7FFFFFFF]))
    zeta = np.zeros(n, dtype=np.int64)
    trajectories: list[list[int]] = []
    for v in range(n):
        neighbors = graph.adj
        for _ in range(K):
            here = v
            traj = [v]
            if count_starts:
                zeta[v] += 1
            while max_len is None or len(traj) - 1 < max_len:
                nxt = walks.step(rng, epsilon, neighbors[here])
                if nxt is None:
                    break
                here = nxt
                traj.append(nxt)
                zeta[nxt] += 1
            trajectories.append(traj)
    return walks.estimate(zeta, n, K, epsilon), trajectories
