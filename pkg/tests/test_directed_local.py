import math

import numpy as np
import pytest

from pagerank_sim import (
    Graph,
    LocalBudget,
    WalkParams,
    generate,
    power_iteration,
    run_directed_local,
)


def chord_cycle(n, stride):
    """Directed cycle plus forward chords: strongly connected, outdegree 2."""
    edges = [(i, (i + 1) % n) for i in range(n)]
    edges += [(i, (i + stride) % n) for i in range(n)]
    return Graph.from_edges(n, edges, directed=True)


def test_budget_formula():
    b = LocalBudget.for_graph(64, 0.2)
    logn = 6.0
    assert b.walks_per_node == math.ceil(20 * 64 * logn * logn / 0.2)
    assert b.lam == math.ceil(math.sqrt(logn / 0.2))
    half = LocalBudget.for_graph(64, 0.2, scale=0.5)
    assert half.walks_per_node == math.ceil(0.5 * 20 * 64 * logn * logn / 0.2)
    assert half.lam == b.lam
    nat = LocalBudget.for_graph(64, 0.2, log_base="natural")
    assert nat.lam == math.ceil(math.sqrt(math.log(64) / 0.2))


def test_budget_validation():
    with pytest.raises(ValueError):
        LocalBudget(walks_per_node=0, lam=2)
    with pytest.raises(ValueError):
        LocalBudget(walks_per_node=10, lam=0)
    with pytest.raises(ValueError):
        LocalBudget.for_graph(1, 0.2)
    with pytest.raises(ValueError):
        LocalBudget.for_graph(8, 0.2, scale=0)


def test_budget_coverage_boundary():
    need = 8 * 5 * math.ceil(12 / 3)  # n=8, K=5, ell=12, lam=3
    assert LocalBudget(walks_per_node=need, lam=3).covers(8, 5, 12)
    assert not LocalBudget(walks_per_node=need - 1, lam=3).covers(8, 5, 12)


def test_run_rejects_undirected_and_dangling():
    ring = generate("ring", 8)
    with pytest.raises(ValueError, match="directed"):
        run_directed_local(ring, WalkParams.for_graph(8, 0.2, K=5), seed=0)
    dangling = Graph.from_edges(3, [(0, 1), (1, 0)], directed=True)
    with pytest.raises(ValueError, match="outdegree"):
        run_directed_local(dangling, WalkParams.for_graph(3, 0.2, K=5), seed=0)


def test_estimates_track_oracle_on_directed_cycle():
    g = generate("directed-cycle", 8)
    params = WalkParams.for_graph(8, 0.2, K=800)
    budget = LocalBudget(walks_per_node=4000, lam=3)
    scores, metrics = run_directed_local(g, params, seed=3, budget=budget)
    pi = power_iteration(g, 0.2).pi
    rel = np.abs(scores.estimates - pi) / pi
    assert rel.mean() < 0.1
    assert metrics.counters["budget_walks_per_node"] == 4000
    assert metrics.counters["budget_lam"] == 3


def test_estimates_track_oracle_on_chorded_cycle():
    g = chord_cycle(12, 5)
    params = WalkParams.for_graph(12, 0.25, K=600)
    budget = LocalBudget(walks_per_node=3000, lam=3)
    scores, _ = run_directed_local(g, params, seed=9, budget=budget)
    pi = power_iteration(g, 0.25).pi
    rel = np.abs(scores.estimates - pi) / pi
    assert rel.mean() < 0.1


def test_walk_generation_rounds_are_fixed():
    g = generate("directed-cycle", 10)
    params = WalkParams.for_graph(10, 0.2, K=30)
    for seed in (1, 2, 3):
        budget = LocalBudget(walks_per_node=600, lam=4)
        _, metrics = run_directed_local(g, params, seed=seed, budget=budget)
        assert metrics.counters["phase1_rounds"] == 4 + 2


def test_deterministic_per_seed():
    g = chord_cycle(9, 4)
    params = WalkParams.for_graph(9, 0.2, K=40)
    budget = LocalBudget(walks_per_node=500, lam=2)
    a, _ = run_directed_local(g, params, seed=5, budget=budget)
    b, _ = run_directed_local(g, params, seed=5, budget=budget)
    c, _ = run_directed_local(g, params, seed=6, budget=budget)
    assert np.array_equal(a.zeta, b.zeta)
    assert not np.array_equal(a.zeta, c.zeta)


def test_budget_scale_shrinks_the_pool():
    g = generate("directed-cycle", 8)
    params = WalkParams.for_graph(8, 0.2, K=10)
    _, big = run_directed_local(g, params, seed=1, budget_scale=0.01)
    _, small = run_directed_local(g, params, seed=1, budget_scale=0.005)
    assert small.counters["budget_walks_per_node"] < big.counters["budget_walks_per_node"]
    assert small.counters["budget_walks_per_node"] >= 1
