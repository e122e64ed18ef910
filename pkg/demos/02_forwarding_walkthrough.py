"""The coupon-forwarding estimator, step by step.

Every node starts K anonymous walk coupons, keeps a visit tally, and each
round forwards the survivors as per-neighbor counts.  Because only counts
travel, a round never puts more than header + log2(n*K+1) bits on an edge,
which the congestion audit verifies.  A replayed decision trace shows the
distributed run is move-for-move identical to a centralized simulation.
"""

import math

import numpy as np

from pagerank_sim import (
    TrajectoryReplay,
    WalkParams,
    audit_congestion,
    count_budget_bits,
    error_report,
    exact_solve,
    generate,
    header_bits,
    naive_monte_carlo,
    run_simple,
)

EPSILON = 0.2
graph = generate("grid", 64, seed=2)
params = WalkParams.for_graph(graph.n, EPSILON, K=2000)
print(f"8x8 grid, epsilon={EPSILON}, K={params.K} walks per node "
      f"({graph.n * params.K} total)")

print()
print("== distributed run ==")
scores, metrics = run_simple(graph, params, seed=42)
oracle = exact_solve(graph, EPSILON)
report = error_report(scores.estimates, oracle.pi)
print(f"finished in {metrics.rounds_elapsed} rounds "
      f"({metrics.message_count} messages, {metrics.total_bits} bits)")
print(f"visit total: {int(scores.zeta.sum())} "
      f"(expect about n*K/epsilon = {graph.n * params.K / EPSILON:.0f})")
print(f"vs exact solver: mean rel {report['mean_rel']:.3f}, "
      f"max rel {report['max_rel']:.3f}")

print()
print("== congestion stays within the counting budget ==")
budget = count_budget_bits(graph.n, params.K)
print(f"budget per edge per round: {budget} bits "
      f"(header {header_bits(graph.n)} + "
      f"count {budget - header_bits(graph.n)})")
violations = audit_congestion(metrics, budget)
print(f"violations: {len(violations)}")
busiest = max(metrics.edge_bits.items(), key=lambda kv: kv[1])
(rnd, src, dst), bits = busiest
print(f"busiest edge-round: {src}->{dst} in round {rnd} carried {bits} bits")

print()
print("== replaying a centralized trace through the network ==")
reference, trajectories = naive_monte_carlo(graph, EPSILON, params.K, seed=9)
replay = TrajectoryReplay(graph, trajectories)
replayed, replay_metrics = run_simple(graph, params, seed=123, decisions=replay)
print(f"visit tallies identical: "
      f"{np.array_equal(replayed.zeta, reference.zeta)}")
longest = max(len(t) - 1 for t in trajectories)
print(f"rounds = longest walk's moves + final delivery: "
      f"{replay_metrics.rounds_elapsed} = {longest} + 1")

print()
print("== rounds shrink as epsilon grows ==")
for eps in (0.1, 0.2, 0.4):
    p = WalkParams.for_graph(graph.n, eps, K=500)
    _, m = run_simple(graph, p, seed=5)
    predicted = math.ceil(math.log(graph.n * p.K) / eps)
    print(f"  epsilon={eps:<4} rounds={m.rounds_elapsed:<4} "
          f"(ln(nK)/epsilon ~ {predicted})")
