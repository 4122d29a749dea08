import numpy as np
import pytest

from matsketch.ensemble import (
    BipartiteGraph,
    ParameterError,
    Support,
    TensorGraph,
    arrow_matrix,
    column_difference_collision,
    default_delta,
    degree_of_sparsity,
    gen_bernoulli_matrix,
    gen_distributed_matrix,
    gen_distributed_support,
    gen_left_regular,
    gen_screened_graph,
    load_graph,
    load_matrix_csv,
    load_support,
    neighbors,
    project_support,
    prop1_degree_bound,
    save_graph,
    save_matrix_csv,
    save_support,
    tensor_neighbors,
)
from matsketch.verify import brute_force_tensor_neighbors


# --- graph generation -------------------------------------------------------


def test_left_regular_column_sums():
    g = gen_left_regular(6, 3, 2, 7)
    A = g.adjacency()
    assert A.shape == (3, 6)
    assert np.array_equal(A.sum(axis=0), np.full(6, 2.0))


def test_left_regular_single_vertex_multi_edge():
    g = gen_left_regular(1, 1, 3, 0)
    assert g.adjacency()[0, 0] == 3.0


def test_left_regular_deterministic_in_seed():
    a = gen_left_regular(10, 6, 3, 42)
    b = gen_left_regular(10, 6, 3, 42)
    c = gen_left_regular(10, 6, 3, 43)
    assert np.array_equal(a.edges, b.edges)
    assert not np.array_equal(a.edges, c.edges)


def test_left_regular_rejects_degenerate_degree():
    with pytest.raises(ParameterError):
        gen_left_regular(4, 2, 21, 0)
    with pytest.raises(ParameterError):
        gen_left_regular(0, 2, 1, 0)


def test_repeated_target_fraction_matches_birthday_value():
    # fraction of left vertices with a repeated target among 4 draws from 21
    exact = 1.0 - (21 * 20 * 19 * 18) / 21.0**4
    assert abs(exact - 0.264) < 5e-3  # pin the arithmetic itself
    rng = np.random.default_rng(123)
    draws = rng.integers(0, 21, size=(10_000 * 40, 4))
    sorted_rows = np.sort(draws, axis=1)
    repeated = (np.diff(sorted_rows, axis=1) == 0).any(axis=1)
    assert abs(repeated.mean() - exact) < 0.02


def test_clip_binary_adjacency():
    g = gen_left_regular(1, 1, 3, 0)
    assert g.adjacency(clip_binary=True)[0, 0] == 1.0


def test_default_delta():
    assert default_delta(40) == 4
    assert default_delta(2) == 2


# --- neighborhoods ----------------------------------------------------------


def test_neighbors_empty_set(hand_graph):
    assert neighbors(hand_graph, set()) == set()


def test_neighbors_contained_in_right_side():
    g = gen_left_regular(12, 5, 3, 9)
    assert neighbors(g, range(12)) <= set(range(5))


def test_neighbors_hand_fixture(hand_graph):
    assert neighbors(hand_graph, {1, 2}) == {0, 1}
    assert neighbors(hand_graph, {0}) == {0, 1}


def test_neighbors_rejects_out_of_range(hand_graph):
    with pytest.raises(ParameterError):
        neighbors(hand_graph, {3})


def test_tensor_neighbors_single_cell_is_cartesian_product():
    g = BipartiteGraph(p=2, m=5, delta=2, edges=np.array([[1, 3], [0, 0]]))
    tg = TensorGraph(g, g)
    sup = Support.from_cells(2, [(0, 0)])
    assert tensor_neighbors(tg, sup) == {(1, 1), (1, 3), (3, 1), (3, 3)}


def test_tensor_neighbors_diagonal_matches_brute_force(hand_graph):
    tg = TensorGraph(hand_graph, hand_graph)
    sup = Support.from_cells(3, [(i, i) for i in range(3)])
    assert tensor_neighbors(tg, sup) == brute_force_tensor_neighbors(tg, sup)


def test_tensor_neighbors_exhaustive_oracle_small_instances():
    rng = np.random.default_rng(5)
    for trial in range(25):
        p = int(rng.integers(2, 9))
        m = int(rng.integers(2, 7))
        g1 = gen_left_regular(p, m, 2, int(rng.integers(1 << 31)))
        g2 = gen_left_regular(p, m, 3, int(rng.integers(1 << 31)))
        tg = TensorGraph(g1, g2)
        sup = gen_distributed_support(p, min(2, p), int(rng.integers(1 << 31)))
        assert tensor_neighbors(tg, sup) == brute_force_tensor_neighbors(tg, sup)


def test_tensor_graph_requires_matching_shapes():
    with pytest.raises(ParameterError):
        TensorGraph(gen_left_regular(3, 2, 1, 0), gen_left_regular(4, 2, 1, 0))


def test_tensor_neighbors_monotone_under_support_growth():
    g = gen_left_regular(8, 5, 2, 3)
    tg = TensorGraph(g, g)
    small = gen_distributed_support(8, 2, 1)
    large = Support.from_cells(8, set(small.cells) | {(0, 3), (5, 2)})
    assert tensor_neighbors(tg, small) <= tensor_neighbors(tg, large)


# --- supports ---------------------------------------------------------------


def test_support_d1_is_diagonal():
    sup = gen_distributed_support(5, 1, 99)
    assert sup.cells == frozenset((i, i) for i in range(5))


def test_support_bounds_at_experiment_scale():
    sup = gen_distributed_support(40, 4, 3)
    assert 40 <= len(sup.cells) <= 160
    assert sup.row_counts.max() <= 4 and sup.col_counts.max() <= 4
    assert sup.is_distributed(4)


def test_support_recount_invariant():
    sup = gen_distributed_support(10, 3, 11)
    rows = np.zeros(10, dtype=int)
    cols = np.zeros(10, dtype=int)
    for i, j in sup.cells:
        rows[i] += 1
        cols[j] += 1
    assert np.array_equal(rows, sup.row_counts)
    assert np.array_equal(cols, sup.col_counts)


def test_support_off_cell_cap():
    sup = gen_distributed_support(12, 4, 2, n_off=5)
    assert len(sup.cells) == 12 + 5
    assert sup.is_distributed(4)
    diag_only = gen_distributed_support(12, 4, 2, n_off=0)
    assert diag_only.cells == frozenset((i, i) for i in range(12))
    with pytest.raises(ParameterError):
        gen_distributed_support(12, 4, 2, n_off=-1)


def test_support_validation():
    with pytest.raises(ParameterError):
        gen_distributed_support(4, 5, 0)
    with pytest.raises(ParameterError):
        Support.from_cells(3, [(0, 3)])
    sup = Support.from_cells(3, [(0, 0), (1, 1)])
    assert not sup.is_distributed(1)  # diagonal incomplete


# --- matrices ---------------------------------------------------------------


def test_distributed_matrix_unit_diagonal_is_identity():
    sup = gen_distributed_support(6, 1, 4)
    X = gen_distributed_matrix(sup, "unit", 0)
    assert np.array_equal(X, np.eye(6))


def test_distributed_matrix_respects_support_and_floor():
    sup = gen_distributed_support(15, 3, 8)
    X = gen_distributed_matrix(sup, ("gaussian", 0.0, 1.0), 5)
    assert degree_of_sparsity(X) <= 3
    nz = {(int(i), int(j)) for i, j in zip(*np.nonzero(X))}
    assert nz == set(sup.cells)
    assert np.abs(X[X != 0]).min() >= 1e-3
    assert np.abs(X).sum() > 0


def test_distributed_matrix_uniform_spec():
    sup = gen_distributed_support(5, 2, 3)
    X = gen_distributed_matrix(sup, ("uniform", 1.0, 2.0), 1)
    assert X[X != 0].min() >= 1.0 and X.max() <= 2.0
    with pytest.raises(ParameterError):
        gen_distributed_matrix(sup, ("triangular", 0, 1), 1)


def test_bernoulli_edge_cases():
    assert np.array_equal(gen_bernoulli_matrix(4, 0.0, 0), np.zeros((4, 4)))
    ones = gen_bernoulli_matrix(4, 1.0, 0)
    assert np.array_equal(ones, np.ones((4, 4)))
    assert degree_of_sparsity(ones) == 4
    with pytest.raises(ParameterError):
        gen_bernoulli_matrix(4, 1.5, 0)


def test_bernoulli_mean_entry_count():
    counts = [gen_bernoulli_matrix(200, 2 / 200, s).sum() for s in range(100)]
    assert abs(np.mean(counts) - 400) <= 60


# --- sparsity arithmetic ----------------------------------------------------


def test_prop1_degree_bound_value():
    d = prop1_degree_bound(2.0, 100, 0.01)
    assert abs(d - (2.0 + 2.0 * np.log(20000.0))) < 1e-12
    assert abs(d - 21.81) < 0.01


def test_prop1_degree_bound_monotone_in_eps():
    assert prop1_degree_bound(2.0, 100, 0.01) > prop1_degree_bound(2.0, 100, 0.1)
    with pytest.raises(ParameterError):
        prop1_degree_bound(0.0, 100, 0.1)
    with pytest.raises(ParameterError):
        prop1_degree_bound(2.0, 100, 1.5)


def test_degree_of_sparsity_patterns():
    assert degree_of_sparsity(np.eye(7)) == 1
    tri = np.eye(6) + np.diag(np.ones(5), 1) + np.diag(np.ones(5), -1)
    assert degree_of_sparsity(tri) == 3
    assert degree_of_sparsity(arrow_matrix(9)) == 9
    assert degree_of_sparsity(np.zeros((3, 3))) == 0


def test_project_support_partitions_l1_mass():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((8, 8))
    sup = gen_distributed_support(8, 3, 6)
    on = project_support(X, sup)
    comp = Support.from_cells(
        8, {(i, j) for i in range(8) for j in range(8)} - set(sup.cells)
    )
    off = project_support(X, comp)
    assert np.allclose(on + off, X)
    assert np.isclose(np.abs(on).sum() + np.abs(off).sum(), np.abs(X).sum())
    # idempotent, and the full grid changes nothing
    assert np.array_equal(project_support(on, sup), on)
    full = Support.from_cells(8, {(i, j) for i in range(8) for j in range(8)})
    assert np.array_equal(project_support(X, full), X)


def test_project_support_diagonal_of_arrow():
    sup = Support.from_cells(5, [(i, i) for i in range(5)])
    assert np.array_equal(project_support(arrow_matrix(5), sup), np.eye(5))


# --- collision screening ----------------------------------------------------


def test_duplicate_columns_are_collisions():
    g = BipartiteGraph(p=2, m=3, delta=2, edges=np.array([[0, 1], [0, 1]]))
    assert column_difference_collision(g)


def test_matched_column_differences_are_collisions():
    # columns 0-1 and 2-3 both differ by the vector e0 - e1
    edges = np.array([[0, 2], [1, 2], [0, 1], [1, 1]])
    g = BipartiteGraph(p=4, m=3, delta=2, edges=edges)
    assert column_difference_collision(g)


def test_screened_graph_is_collision_free():
    g = gen_screened_graph(40, 21, 4, 0)
    assert not column_difference_collision(g)
    # deterministic in the seed
    h = gen_screened_graph(40, 21, 4, 0)
    assert np.array_equal(g.edges, h.edges)


# --- serialization ----------------------------------------------------------


def test_graph_round_trip(tmp_path):
    g = gen_left_regular(7, 4, 3, 13)
    path = tmp_path / "g.txt"
    save_graph(g, path)
    h = load_graph(path)
    assert (h.p, h.m, h.delta) == (7, 4, 3)
    assert np.array_equal(g.edges, h.edges)
    first = path.read_text().splitlines()[0]
    assert first == "7 4 3"


def test_support_round_trip(tmp_path):
    sup = gen_distributed_support(9, 3, 21)
    path = tmp_path / "s.txt"
    save_support(sup, path)
    assert load_support(path, 9) == sup


def test_matrix_csv_round_trip(tmp_path):
    X = np.random.default_rng(3).standard_normal((4, 6))
    path = tmp_path / "x.csv"
    save_matrix_csv(X, path)
    assert np.allclose(load_matrix_csv(path), X, atol=0, rtol=1e-15)
