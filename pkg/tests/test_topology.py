import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mgdsgd import topology as tp
from oracles import all_pairs_hops, jacobi_eigvalsh, ring_adjacency


def test_ring_10_2_neighbours():
    g = tp.ring_lattice(10, 2)
    assert g.neighbors(1) == [2, 10]
    assert all(g.degree == 2 for _ in range(10))


def test_ring_10_4_neighbours():
    assert tp.ring_lattice(10, 4).neighbors(1) == [2, 3, 9, 10]


@pytest.mark.parametrize("n,k", [(10, 9), (10, 3), (10, 0), (3, 2), (10, 10)])
def test_ring_rejects_invalid(n, k):
    with pytest.raises(ValueError):
        tp.ring_lattice(n, k)


def test_complete_graph_all_pairs():
    g = tp.complete_graph(10)
    assert g.is_complete
    assert g.neighbors(3) == [j for j in range(1, 11) if j != 3]


def test_adjacency_symmetric_and_regular():
    for n, k in [(9, 4), (12, 6), (15, 2)]:
        A = tp.ring_lattice(n, k).adjacency_matrix()
        assert_array_equal(A, A.T)
        assert_array_equal(A.sum(axis=1), k)
        assert_array_equal(A, ring_adjacency(n, k))


@pytest.mark.parametrize("n,k,i,j,expected", [(10, 4, 1, 6, 3), (10, 2, 1, 6, 5), (10, 4, 4, 4, 0)])
def test_distance_examples(n, k, i, j, expected):
    g = tp.ring_lattice(n, k)
    assert tp.distance(g, i, j) == expected
    assert tp.bfs_distance(g, i, j) == expected


def test_distance_rejects_out_of_range():
    g = tp.ring_lattice(10, 2)
    with pytest.raises(IndexError):
        tp.distance(g, 0, 3)
    with pytest.raises(IndexError):
        tp.distance(g, 1, 11)


@pytest.mark.parametrize("n,k,expected", [(10, 2, 5), (10, 4, 3), (12, 4, 3)])
def test_diameter_examples(n, k, expected):
    assert tp.diameter(n, k) == expected
    assert all_pairs_hops(ring_adjacency(n, k)).max() == expected


def test_distance_matches_bfs_small_sweep():
    for n in range(4, 25):
        for k in range(2, n - 1, 2):
            g = tp.ring_lattice(n, k)
            hops = all_pairs_hops(ring_adjacency(n, k))
            closed = np.array([[tp.distance(g, i, j) for j in range(1, n + 1)]
                               for i in range(1, n + 1)])
            assert_array_equal(closed, hops)


def test_spectrum_4_cycle():
    assert_allclose(tp.laplacian_spectrum(4, 2).eigenvalues, [0, 2, 4, 2], atol=1e-12)


def test_spectrum_against_assembled_matrix():
    for n, k in [(7, 2), (16, 6), (31, 10)]:
        rep = tp.laplacian_spectrum(n, k)
        assert rep.eigenvalues[0] == 0
        assert np.all(rep.eigenvalues >= -1e-12) and np.all(rep.eigenvalues <= 2 * k)
        assert_allclose(np.sort(rep.eigenvalues), jacobi_eigvalsh(tp.laplacian_matrix(n, k)),
                        atol=1e-9)
        assert rep.sandwich_holds


def test_laplacian_matrix_is_degree_minus_adjacency():
    assert_array_equal(tp.laplacian_matrix(9, 4), 4 * np.eye(9) - ring_adjacency(9, 4))


def test_weight_matrix_beta_zero_is_averaging():
    W, g = tp.construct_weight_matrix(16, 0.0)
    assert g.is_complete
    assert_allclose(W.entries, np.full((16, 16), 1 / 16), atol=1e-15)
    assert W.beta == pytest.approx(0.0, abs=1e-12)


def test_weight_matrix_case1_below_boundary():
    W, g = tp.construct_weight_matrix(10, 0.5)
    assert g.is_complete
    assert_allclose(W.entries, 0.05 * np.ones((10, 10)) + 0.5 * np.eye(10), atol=1e-15)
    assert W.beta == pytest.approx(0.5, abs=1e-8)


def test_weight_matrix_case2_at_cos_pi_over_n():
    target = math.cos(math.pi / 50)
    W, g = tp.construct_weight_matrix(50, target)
    assert 2 <= g.degree_k < 49
    assert abs(W.beta - target) <= 1e-8
    assert W.stochasticity_error() <= 1e-12
    assert W.respects_graph()
    assert_allclose(W.entries, W.entries.T, atol=0)
    assert np.linalg.eigvalsh(W.entries).min() >= -1e-10


def test_weight_matrix_tie_goes_to_complete_graph():
    _, g = tp.construct_weight_matrix(20, tp.CASE_BOUNDARY)
    assert g.is_complete


@pytest.mark.parametrize("n,beta", [(10, 1.0), (10, -0.1), (20, math.cos(math.pi / 20) + 1e-6)])
def test_weight_matrix_rejects_infeasible_target(n, beta):
    with pytest.raises(ValueError):
        tp.construct_weight_matrix(n, beta)


def test_case2_needs_ten_nodes():
    # 0.9397 sits just above cos(pi/9), so it needs the ring-lattice branch
    with pytest.raises(ValueError):
        tp.construct_weight_matrix(9, 0.9397)
    tp.construct_weight_matrix(10, 0.945)


def test_connectivity_trivial_cases():
    n = 6
    assert tp.connectivity_measure(np.full((n, n), 1 / n)) == pytest.approx(0.0, abs=1e-12)
    assert tp.connectivity_measure(np.eye(n)) == pytest.approx(1.0, rel=1e-10)


def test_connectivity_matches_dense_norm():
    W, _ = tp.construct_weight_matrix(50, 0.95)
    dense = np.linalg.norm(W.entries - np.full((50, 50), 1 / 50), 2)
    assert W.beta == pytest.approx(0.95, abs=1e-8)
    assert tp.connectivity_measure(W.entries) == pytest.approx(dense, rel=1e-9)


def test_connectivity_rejects_non_square():
    with pytest.raises(ValueError):
        tp.connectivity_measure(np.ones((3, 4)))


def test_connectivity_reports_non_convergence():
    # Two nearly tied singular values need many iterations.
    W, _ = tp.construct_weight_matrix(200, math.cos(math.pi / 200))
    with pytest.raises(tp.ConvergenceError):
        tp.connectivity_measure(W.entries, max_iter=3)


@pytest.mark.parametrize("n,k", [(20, 4), (12, 2)])
def test_h_k_bound(n, k):
    rep = tp.h_k_bound_check(n, k, 10_000)
    assert rep.holds
    assert rep.max_value <= rep.bound + 1e-12


def test_h_k_at_half_pi():
    for k in (2, 4, 6, 8):
        assert abs(tp.h_k(math.pi / 2, k)) == pytest.approx(1.0, abs=1e-12)


def test_h_k_rejects_bad_precondition():
    with pytest.raises(ValueError):
        tp.h_k_bound_check(5, 6, 10_000)
    with pytest.raises(ValueError):
        tp.h_k_bound_check(20, 4, 10)


def test_weight_matrix_file_round_trip(tmp_path):
    W, _ = tp.construct_weight_matrix(20, 0.97)
    path = tmp_path / "w.txt"
    tp.save_weight_matrix(path, W)
    header = path.read_text().splitlines()[0].split()
    assert header[0] == "20" and int(header[1]) == W.degree_k
    back = tp.load_weight_matrix(path)
    assert_array_equal(back.entries, W.entries)
    assert back.beta == W.beta and back.degree_k == W.degree_k


def test_uniform_ring_weights():
    W = tp.uniform_weight_matrix(tp.ring_lattice(12, 2))
    assert_allclose(W.entries.sum(axis=0), 1, atol=1e-15)
    assert W.respects_graph()
    # spectrum of (A + I)/3 on the 12-cycle
    assert W.beta == pytest.approx((1 + 2 * math.cos(2 * math.pi / 12)) / 3, abs=1e-9)
