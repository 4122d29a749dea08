"""End-to-end application flows built on the core recovery path:
covariance sketching from streamed samples, cross-covariance sketching,
graph sketching / unsketching, and rectangular recovery via zero padding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .ensemble import (
    ParameterError,
    Support,
    gen_distributed_matrix,
    gen_left_regular,
    gen_screened_graph,
)
from .operator import SketchOperator
from .solver import RecoveryResult, SolverOptions, solve_p1, solve_constrained


# --- covariance sketching --------------------------------------------------


def gen_symmetric_distributed_support(
    p: int, d: int, seed: int, n_pairs: int | None = None
) -> Support:
    """Symmetric d-distributed support: diagonal plus mirrored off-diagonal
    pairs added by rejection sampling while the d bound permits.

    ``n_pairs`` caps the number of mirrored off-diagonal pairs; the default
    fills every row and column to d cells where feasible.
    """
    if d < 1 or d > p:
        raise ParameterError(f"need 1 <= d <= p, got d={d}, p={p}")
    if n_pairs is not None and n_pairs < 0:
        raise ParameterError("n_pairs must be nonnegative")
    rng = np.random.default_rng(seed)
    cells = {(i, i) for i in range(p)}
    counts = np.ones(p, dtype=np.int64)  # symmetric, so row == col counts
    attempts = 0
    cap = 100 * p * d

    def unfinished():
        if n_pairs is not None:
            return (len(cells) - p) // 2 < n_pairs
        return counts.min() < d

    while attempts < cap and unfinished():
        attempts += 1
        i = int(rng.integers(p))
        j = int(rng.integers(p))
        if i == j or (i, j) in cells:
            continue
        if counts[i] + 1 > d or counts[j] + 1 > d:
            continue
        cells.add((i, j))
        cells.add((j, i))
        counts[i] += 1
        counts[j] += 1
    return Support.from_cells(p, cells)


def gen_distributed_covariance(
    p: int, d: int, seed: int, n_pairs: int | None = None
) -> np.ndarray:
    """Random symmetric PSD d-distributed sparse covariance.

    Off-diagonal values are standard normal (mirrored); the diagonal is set
    to d * max|off-diagonal| + 1, which makes the matrix diagonally
    dominant and hence positive definite.
    """
    support = gen_symmetric_distributed_support(p, d, seed, n_pairs=n_pairs)
    rng = np.random.default_rng(seed + 1)
    sigma = np.zeros((p, p))
    for i, j in sorted(support.cells):
        if i < j:
            v = rng.standard_normal()
            sigma[i, j] = v
            sigma[j, i] = v
    off_max = np.abs(sigma).max() if p > 1 else 0.0
    np.fill_diagonal(sigma, d * off_max + 1.0)
    return sigma


@dataclass
class SampleStream:
    """Seeded source of i.i.d. Gaussian p-vectors with covariance sigma."""

    sigma: np.ndarray
    n: int
    seed: int

    def __post_init__(self):
        w, V = scipy.linalg.eigh(self.sigma)
        if w.min() < -1e-10 * max(1.0, w.max()):
            raise ParameterError("sigma is not positive semidefinite")
        self._factor = V * np.sqrt(np.maximum(w, 0.0))  # symmetric square root

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    def samples(self):
        """Yield the n samples one at a time (nothing p-dimensional is kept
        beyond the current sample)."""
        rng = np.random.default_rng(self.seed)
        for _ in range(self.n):
            yield self._factor @ rng.standard_normal(self.p)

    def empirical_covariance(self) -> np.ndarray:
        """Two-pass reference: the unsketched sample covariance."""
        acc = np.zeros((self.p, self.p))
        for xi in self.samples():
            acc += np.outer(xi, xi)
        return acc / self.n


def cov_sketch(stream: SampleStream, A: np.ndarray) -> np.ndarray:
    """Sketch-domain empirical covariance (1/n) sum of (A xi)(A xi)^T,
    accumulated in one pass over the sketched samples."""
    m = A.shape[0]
    acc = np.zeros((m, m))
    for xi in stream.samples():
        z = A @ xi
        acc += np.outer(z, z)
    return acc / stream.n


def recover_covariance(
    A: np.ndarray,
    sigma_z: np.ndarray,
    mode: str = "exact",
    kappa: float = 0.0,
    opts: SolverOptions = SolverOptions(),
    symmetry_tol: float = 1e-8,
) -> RecoveryResult:
    """Recover a distributed-sparse covariance from its sketch A Sigma A^T.

    mode "exact" solves the equality program; "constrained" relaxes the
    constraint to an l2 ball of radius kappa around the observed sketch.
    """
    sigma_z = np.asarray(sigma_z, dtype=float)
    asym = np.linalg.norm(sigma_z - sigma_z.T) / max(1.0, np.linalg.norm(sigma_z))
    if asym > symmetry_tol:
        raise ParameterError(f"sketch asymmetry {asym:.2e} exceeds {symmetry_tol:.0e}")
    sigma_z = 0.5 * (sigma_z + sigma_z.T)
    op = SketchOperator(A=np.array(A, dtype=float), B=np.array(A, dtype=float), shared_ab=True)
    if mode == "exact":
        return solve_p1(op, sigma_z, opts)
    if mode == "constrained":
        return solve_constrained(op, sigma_z, kappa, opts)
    raise ParameterError(f"unknown mode {mode!r}")


def cross_cov_recover(
    A: np.ndarray,
    B: np.ndarray,
    sigma_zw: np.ndarray,
    opts: SolverOptions = SolverOptions(),
) -> RecoveryResult:
    """Recover a distributed-sparse cross-covariance from A Sigma B^T;
    independent sketching matrices, no symmetry requirement."""
    op = SketchOperator(A=np.array(A, dtype=float), B=np.array(B, dtype=float))
    return solve_p1(op, np.asarray(sigma_zw, dtype=float), opts)


def select_kappa_cv(
    A: np.ndarray,
    stream: SampleStream,
    n_folds: int = 5,
    grid: np.ndarray | None = None,
    opts: SolverOptions = SolverOptions(),
    seed: int = 0,
) -> float:
    """Pick the constraint radius by k-fold cross-validation.

    Candidates default to {2^-8, ..., 2^4} * ||sketch||_2; each fold
    recovers from the training-half sketch covariance and scores the
    held-out sketch covariance in Frobenius norm.
    """
    samples = [np.asarray(A) @ xi for xi in stream.samples()]
    n = len(samples)
    if n < n_folds:
        raise ParameterError("need at least one sample per fold")
    full = sum(np.outer(z, z) for z in samples) / n
    if grid is None:
        grid = np.linalg.norm(full) * (2.0 ** np.arange(-8, 5, dtype=float))
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    folds = np.array_split(order, n_folds)

    scores = np.zeros(len(grid))
    for fold in folds:
        held = set(fold.tolist())
        train = [samples[i] for i in range(n) if i not in held]
        val = [samples[i] for i in fold]
        y_train = sum(np.outer(z, z) for z in train) / len(train)
        y_val = sum(np.outer(z, z) for z in val) / len(val)
        y_train = 0.5 * (y_train + y_train.T)
        op = SketchOperator(A=np.array(A, dtype=float), B=np.array(A, dtype=float), shared_ab=True)
        for k, kappa in enumerate(grid):
            res = solve_constrained(op, y_train, float(kappa), opts)
            scores[k] += np.linalg.norm(op.forward(res.x) - y_val)
    return float(grid[int(np.argmin(scores))])


# --- graph sketching -------------------------------------------------------


@dataclass
class PartitionedGraph:
    """An undirected graph on [p] (self-loops on every vertex) together with
    m vertex subsets; overlaps are allowed, every vertex joins >= 1 part."""

    adjacency: np.ndarray  # p x p symmetric 0/1, ones on the diagonal
    parts: list  # list of vertex index collections

    def __post_init__(self):
        X = np.asarray(self.adjacency)
        if not np.array_equal(X, X.T):
            raise ParameterError("adjacency must be symmetric")
        covered = set()
        for part in self.parts:
            covered.update(int(v) for v in part)
        if covered != set(range(X.shape[0])):
            raise ParameterError("every vertex must belong to at least one part")

    @property
    def p(self) -> int:
        return self.adjacency.shape[0]

    def indicator(self) -> np.ndarray:
        """m x p part-membership indicator matrix."""
        A = np.zeros((len(self.parts), self.p))
        for i, part in enumerate(self.parts):
            for v in part:
                A[i, int(v)] = 1.0
        return A


def graph_sketch(pg: PartitionedGraph) -> np.ndarray:
    """Edge-count sketch A X A^T of the graph adjacency (self-loops on the
    diagonal), where A is the partition indicator."""
    A = pg.indicator()
    return A @ pg.adjacency @ A.T


def random_partition(p: int, m: int, delta: int, seed: int) -> np.ndarray:
    """Partition indicator from the left-regular ensemble: each vertex joins
    delta parts drawn with replacement, so the indicator is the (possibly
    multi-edge) graph adjacency. Draws are screened against
    column-difference collisions, which would make distinct vertex pairs
    indistinguishable in the sketch."""
    return gen_screened_graph(p, m, delta, seed).adjacency()


def graph_unsketch(
    Y: np.ndarray, A: np.ndarray, opts: SolverOptions = SolverOptions()
):
    """Recover the adjacency from the sketch by l1 minimization, then round
    entrywise at 0.5. Returns (RecoveryResult, rounded 0/1 adjacency)."""
    op = SketchOperator(A=np.array(A, dtype=float), B=np.array(A, dtype=float), shared_ab=True)
    res = solve_p1(op, np.asarray(Y, dtype=float), opts)
    rounded = (res.x >= 0.5).astype(float)
    return res, rounded


def gen_bounded_degree_graph(
    p: int, max_off_degree: int, seed: int, n_edges: int | None = None
) -> np.ndarray:
    """Random undirected graph with at most max_off_degree off-diagonal
    neighbors per vertex; all self-loops present (adjacency diagonal = 1).

    ``n_edges`` caps the number of off-diagonal edges; the default keeps
    adding until every vertex reaches the degree bound.
    """
    rng = np.random.default_rng(seed)
    X = np.eye(p)
    deg = np.zeros(p, dtype=np.int64)
    attempts = 0
    n_added = 0
    while attempts < 50 * p * max_off_degree and (
        deg.min() < max_off_degree if n_edges is None else n_added < n_edges
    ):
        attempts += 1
        i = int(rng.integers(p))
        j = int(rng.integers(p))
        if i == j or X[i, j] == 1.0:
            continue
        if deg[i] >= max_off_degree or deg[j] >= max_off_degree:
            continue
        X[i, j] = X[j, i] = 1.0
        deg[i] += 1
        deg[j] += 1
        n_added += 1
    return X


def load_edge_list(path, p: int) -> np.ndarray:
    """Adjacency from a text file of 1-based ``u v`` lines; self-loops are
    added for every vertex regardless of the file contents."""
    X = np.eye(p)
    with open(path) as fh:
        for line in fh:
            if line.strip():
                u, v = (int(t) - 1 for t in line.split())
                X[u, v] = X[v, u] = 1.0
    return X


def load_partition(path, p: int) -> list:
    """Parts from a text file of 1-based ``vertex part`` lines."""
    parts: dict[int, set] = {}
    with open(path) as fh:
        for line in fh:
            if line.strip():
                v, k = (int(t) - 1 for t in line.split())
                parts.setdefault(k, set()).add(v)
    return [sorted(parts[k]) for k in sorted(parts)]


# --- rectangular recovery --------------------------------------------------


def rectangular_recover(
    A: np.ndarray,
    B: np.ndarray,
    Y: np.ndarray,
    delta: int,
    pad_seed: int,
    opts: SolverOptions = SolverOptions(),
    pad_tol: float = 1e-6,
):
    """Recover a rectangular p1 x p2 distributed-sparse matrix from A X B^T.

    The narrower sketching matrix is augmented with fresh ensemble columns
    so the square solver applies; the padding rows of the solution must
    come back (near) zero, and are stripped from the returned matrix.
    Returns (X p1 x p2, RecoveryResult for the padded square problem).
    """
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float)
    m, p1 = A.shape
    p2 = B.shape[1]
    if p1 > p2:
        X_t, res = rectangular_recover(B, A, np.asarray(Y).T, delta, pad_seed, opts, pad_tol)
        return X_t.T, res
    p = p2
    if p1 < p:
        pad = gen_left_regular(p - p1, m, delta, pad_seed).adjacency()
        A_sq = np.hstack([A, pad])
    else:
        A_sq = A
    op = SketchOperator(A=A_sq, B=B)
    res = solve_p1(op, np.asarray(Y, dtype=float), opts)
    pad_mass = float(np.abs(res.x[p1:, :]).max(initial=0.0))
    if pad_mass > pad_tol:
        res.converged = False
    res.diagnostics["pad_row_max"] = pad_mass
    return res.x[:p1, :], res
