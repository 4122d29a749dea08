"""Recover a distributed-sparse matrix from a compressed sketch.

A 40x40 matrix with at most 4 nonzeros per row/column (diagonal always
included) is compressed to a 21x21 sketch Y = A X A^T, a 2.8x reduction
in each dimension, and recovered exactly by l1 minimization.
"""

import numpy as np

from matsketch import (
    SketchOperator,
    gen_distributed_matrix,
    gen_distributed_support,
    gen_screened_graph,
    solve_p1,
)

p, m, d, delta = 40, 21, 4, 4

graph = gen_screened_graph(p, m, delta, seed=1)
op = SketchOperator.from_graphs(graph)

support = gen_distributed_support(p, d, seed=2, n_off=12)
X = gen_distributed_matrix(support, ("gaussian", 0.0, 1.0), seed=3)
Y = op.forward(X)

print(f"signal: {p}x{p} with {len(support.cells)} nonzeros")
print(f"sketch: {m}x{m}  ({Y.size} measurements for {p * p} unknowns)")

result = solve_p1(op, Y)
err = np.abs(result.x - X).max()
print(f"solver: {result.iterations} iterations, converged={result.converged}")
print(f"recovery error (l-infinity): {err:.2e}")
