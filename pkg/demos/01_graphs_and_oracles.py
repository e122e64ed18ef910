"""Tour of the graph toolkit and the reference PageRank solvers.

Builds graphs three ways (by hand, by generator, from an edge-list file),
then scores one of them with the dense linear solve, power iteration, and
a centralized Monte Carlo run, showing that all three agree.
"""

import io

import numpy as np

from pagerank_sim import (
    Graph,
    exact_solve,
    generate,
    is_connected,
    load_edge_list,
    naive_monte_carlo,
    power_iteration,
    serialize,
    validate,
)

EPSILON = 0.2

print("== building graphs ==")
triangle = Graph.from_edges(3, [(0, 1), (1, 2), (2, 0)])
print(f"hand-built triangle: n={triangle.n}, edges={triangle.edge_count}, "
      f"directed={triangle.directed}")

grid = generate("grid", 16, seed=0)
er = generate("erdos-renyi", 24, seed=5, p=0.2)
print(f"4x4 grid: degrees min={grid.out_degrees.min()} max={grid.out_degrees.max()}")
print(f"seeded ER(24, 0.2): {er.edge_count} edges, connected={is_connected(er)}")
print(f"validate(er) -> {validate(er) or 'no problems'}")

print()
print("== edge-list round trip ==")
text = serialize(er)
print("first three lines of the serialized form:")
for line in text.splitlines()[:3]:
    print(f"  {line}")
reloaded = load_edge_list(io.StringIO(text))
print(f"reloaded equals original: "
      f"{all(np.array_equal(a, b) for a, b in zip(er.adj, reloaded.adj))}")

print()
print("== three oracles, one answer ==")
dense = exact_solve(er, EPSILON)
power = power_iteration(er, EPSILON)
mc, trajectories = naive_monte_carlo(er, EPSILON, K=4000, seed=7)

print(f"exact_solve:      sum={dense.pi.sum():.12f}")
print(f"power_iteration:  {power.iterations} iterations, "
      f"residual={power.residual:.2e}")
print(f"max |exact - power| = {np.abs(dense.pi - power.pi).max():.2e}")

walks = len(trajectories)
total_visits = sum(len(t) for t in trajectories)
print(f"naive_monte_carlo: {walks} walks, {total_visits} visits, "
      f"mean length {total_visits / walks:.2f} (expect ~{1 / EPSILON:.1f})")
rel = np.abs(mc.estimates - dense.pi) / dense.pi
print(f"Monte Carlo vs exact: mean rel error {rel.mean():.3f}, "
      f"max rel error {rel.max():.3f}")

print()
print("== highest and lowest scoring nodes ==")
order = np.argsort(dense.pi)
for label, v in [("lowest", order[0]), ("highest", order[-1])]:
    print(f"{label}: node {v} degree {er.out_degrees[v]} "
          f"pi={dense.pi[v]:.4f} estimate={mc.estimates[v]:.4f}")
