"""Sketch a graph by partitioning its vertices, then unsketch it.

A bounded-degree graph on 40 vertices is compressed to a 21x21 matrix of
edge counts between (overlapping, random) vertex groups; l1 minimization
followed by rounding reconstructs the original adjacency exactly.
"""

import numpy as np

from matsketch.pipelines import (
    gen_bounded_degree_graph,
    graph_unsketch,
    random_partition,
)

p, m = 40, 21

X = gen_bounded_degree_graph(p, max_off_degree=3, seed=4, n_edges=16)
A = random_partition(p, m, delta=4, seed=5)
Y = A @ X @ A.T

n_edges = int((X.sum() - p) // 2)
print(f"graph: {p} vertices, {n_edges} edges (+ self-loops)")
print(f"sketch: {m}x{m} group-to-group edge counts")

result, rounded = graph_unsketch(Y, A)
print(f"recovered exactly: {np.array_equal(rounded, X)}")
