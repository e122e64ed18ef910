"""Random-walk primitives shared by every algorithm.

The walk law is the standard PageRank process: at each step a walk resets
(terminates, here) with probability ``epsilon`` and otherwise moves to a
uniformly random out-neighbor.  Visit counts ``zeta`` turn into score
estimates through ``zeta * epsilon / (n * K)`` where ``K`` is the number
of walks started per node.  A walk's starting position counts as a visit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_C",
    "ScoreVector",
    "WalkParams",
    "error_report",
    "estimate",
    "log_of",
    "step",
    "walk_length_cap",
    "walks_per_node",
]

DEFAULT_C = 20.0

_LOG_BASES = ("base2", "natural")


def log_of(n: int, log_base: str = "base2") -> float:
    """log(n) in the configured base. Every derived parameter funnels through here."""
    if log_base not in _LOG_BASES:
        raise ValueError(f"log_base must be one of {_LOG_BASES}, got {log_base!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.log2(n) if log_base == "base2" else math.log(n)


def walks_per_node(n: int, c: float = DEFAULT_C, log_base: str = "base2") -> int:
    """K = ceil(c * log n): walks each node starts."""
    if n < 2:
        raise ValueError("walks_per_node needs n >= 2 (log n would vanish)")
    if c <= 0:
        raise ValueError("c must be positive")
    return math.ceil(c * log_of(n, log_base))


def walk_length_cap(n: int, epsilon: float, log_base: str = "base2") -> int:
    """ell = ceil(log n / epsilon): the length at which long walks are truncated."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie strictly between 0 and 1")
    return max(1, math.ceil(log_of(n, log_base) / epsilon))


@dataclass(frozen=True)
class WalkParams:
    """Resolved Monte Carlo parameters for one graph size.

    Build with :meth:`for_graph` so K and ell derive from n unless
    explicitly overridden (tests and sweeps override K all the time).
    """

    epsilon: float
    K: int
    ell: int
    c: float = DEFAULT_C
    log_base: str = "base2"

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must lie strictly between 0 and 1")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.log_base not in _LOG_BASES:
            raise ValueError(f"log_base must be one of {_LOG_BASES}")

    @classmethod
    def for_graph(
        cls,
        n: int,
        epsilon: float,
        *,
        c: float = DEFAULT_C,
        K: int | None = None,
        ell: int | None = None,
        log_base: str = "base2",
    ) -> "WalkParams":
        if K is None:
            K = walks_per_node(n, c, log_base)
        if ell is None:
            ell = walk_length_cap(n, epsilon, log_base)
        return cls(epsilon=epsilon, K=K, ell=ell, c=c, log_base=log_base)


def step(rng: np.random.Generator, epsilon: float, out_neighbors: np.ndarray) -> int | None:
    """One walk step: ``None`` to terminate (probability epsilon), else the next node."""
    if rng.random() < epsilon:
        return None
    return int(out_neighbors[rng.integers(len(out_neighbors))])


@dataclass(frozen=True)
class ScoreVector:
    """Visit counts plus the induced score estimates for one run."""

    zeta: np.ndarray
    estimates: np.ndarray
    n: int
    K: int
    epsilon: float

    @classmethod
    def from_zeta(cls, zeta: np.ndarray, n: int, K: int, epsilon: float) -> "ScoreVector":
        zeta = np.asarray(zeta, dtype=np.int64)
        if zeta.shape != (n,):
            raise ValueError(f"zeta must have shape ({n},)")
        if (zeta < 0).any():
            raise ValueError("visit counts cannot be negative")
        if K < 1:
            raise ValueError("K must be >= 1")
        est = zeta.astype(np.float64) * (epsilon / (n * K))
        zeta.setflags(write=False)
        est.setflags(write=False)
        return cls(zeta=zeta, estimates=est, n=n, K=K, epsilon=epsilon)


def estimate(zeta: np.ndarray, n: int, K: int, epsilon: float) -> ScoreVector:
    """Wrap raw visit counts in a :class:`ScoreVector` (estimates = zeta*eps/(n*K))."""
    return ScoreVector.from_zeta(zeta, n, K, epsilon)


def error_report(estimates: np.ndarray, oracle: np.ndarray) -> dict[str, float]:
    """Deviation summary of ``estimates`` against a strictly positive reference.

    Returns ``max_rel``, ``mean_rel``, ``l1`` and ``linf``.  Relative
    errors are per-node ``|est - ref| / ref``, which is why a zero oracle
    entry is rejected rather than silently propagated as inf.
    """
    est = np.asarray(estimates, dtype=np.float64)
    ref = np.asarray(oracle, dtype=np.float64)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {ref.shape}")
    if (ref <= 0).any():
        raise ValueError("oracle scores must be strictly positive for relative errors")
    diff = np.abs(est - ref)
    rel = diff / ref
    return {
        "max_rel": float(rel.max()),
        "mean_rel": float(rel.mean()),
        "l1": float(diff.sum()),
        "linf": float(diff.max()),
    }
