import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mgdsgd import optimizers as op
from mgdsgd import problems as pb
from mgdsgd.gossip import GossipPlan, mixing_polynomial
from mgdsgd.topology import construct_weight_matrix, ring_lattice, uniform_weight_matrix


@pytest.fixture(scope="module")
def W12():
    return construct_weight_matrix(12, 0.95)[0]


def hetero(n=12, sigma_sq=0.0, b_sq=1.0, seed=0):
    return pb.heterogeneous_quadratic_suite(n, 5, 1.0, 0.1, b_sq, sigma_sq, seed=seed)


def test_schedule_validation():
    with pytest.raises(ValueError):
        op.Schedule(0.0)
    with pytest.raises(ValueError):
        op.Schedule(0.1, R=0)
    assert op.Schedule(0.1, 2, "pl").regime is op.Regime.pl


def test_round_rng_is_counter_keyed():
    a = op.round_rng(3, 7).standard_normal(4)
    b = op.round_rng(3, 7).standard_normal(4)
    c = op.round_rng(3, 8).standard_normal(4)
    assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_dsgd_reduces_to_gradient_descent():
    H = hetero(b_sq=0.0)
    W, _ = construct_weight_matrix(12, 0.0)
    state = op.init_state(H)
    x = np.zeros(5)
    for _ in range(5):
        state = op.dsgd_step(state, H, W, 0.3)
        x = x - 0.3 * H.grad(x)
    assert_allclose(state.X, np.tile(x, (12, 1)), atol=1e-12)


def test_dsgd_zero_step_is_pure_gossip(W12):
    H = hetero(sigma_sq=1.0)
    X = np.random.default_rng(0).standard_normal((12, 5))
    state = op.OptimizerState(X)
    with pytest.raises(ValueError):
        op.Schedule(0.0)
    nxt = op.dsgd_step(state, H, W12, 0.0)
    assert_allclose(nxt.X, W12.entries @ X, atol=1e-14)
    assert (nxt.k, nxt.grad_queries, nxt.comm_rounds) == (1, 1, 1)


def test_dsgd_step_hand_computed(W12):
    H = hetero()
    x = np.random.default_rng(1).standard_normal(5)
    X = np.tile(x, (12, 1))
    nxt = op.dsgd_step(op.OptimizerState(X), H, W12, 0.2)
    G = (X - H.offsets) @ H.A
    assert_allclose(nxt.X, W12.entries @ (X - 0.2 * G), atol=1e-12)


def test_dimension_checks(W12):
    H = hetero(n=10)
    with pytest.raises(ValueError):
        op.dsgd_step(op.init_state(H), H, W12, 0.1)
    H12 = hetero()
    with pytest.raises(ValueError):
        op.dsgd_step(op.OptimizerState(np.zeros((12, 4))), H12, W12, 0.1)


def test_mg_with_one_round_and_no_momentum_is_dsgd(W12):
    H = hetero(sigma_sq=2.0)
    state = op.init_state(H, seed=4, x0=np.ones(5))
    a = op.dsgd_step(state, H, W12, 0.1)
    b = op.mg_dsgd_step(state, H, GossipPlan(W12, 1, eta=0.0), 0.1)
    assert_allclose(a.X, b.X, atol=1e-15)


def test_mg_noise_free_gradient_independent_of_R(W12):
    H = hetero()
    state = op.init_state(H, x0=np.ones(5))
    for R in (1, 3, 8):
        plan = GossipPlan(W12, R)
        nxt = op.mg_dsgd_step(state, H, plan, 0.1)
        phi = state.X - 0.1 * H.local_grads(state.X)
        assert_allclose(nxt.X, mixing_polynomial(W12, plan.eta, R) @ phi, atol=1e-10)
        assert nxt.grad_queries == R and nxt.comm_rounds == R


def test_mg_matches_matrix_form_with_noise(W12):
    H = hetero(sigma_sq=1.0)
    state = op.init_state(H, seed=2)
    plan = GossipPlan(W12, 6)
    nxt = op.mg_dsgd_step(state, H, plan, 0.05)
    G = H.sample_grads(state.X, op.round_rng(2, 0), 6)
    assert_allclose(nxt.X, mixing_polynomial(W12, plan.eta, 6) @ (state.X - 0.05 * G), atol=1e-10)


@pytest.mark.parametrize("algorithm", ["dsgd", "mg_dsgd"])
def test_mean_iterate_identity(W12, algorithm):
    H = hetero(sigma_sq=1.0)
    state = op.init_state(H, seed=11, x0=np.full(5, 0.3))
    plan = GossipPlan(W12, 4)
    for _ in range(10):
        R = 1 if algorithm == "dsgd" else 4
        G = H.sample_grads(state.X, op.round_rng(state.seed, state.k), R)
        expected = state.mean - 0.07 * G.mean(axis=0)
        state = (op.dsgd_step(state, H, W12, 0.07) if algorithm == "dsgd"
                 else op.mg_dsgd_step(state, H, plan, 0.07))
        assert_allclose(state.mean, expected, atol=1e-12)


def test_mg_consensus_contraction_homogeneous():
    # W from the complete-graph branch: all disagreement modes sit at beta exactly
    n, beta, R = 12, 0.6, 4
    W, _ = construct_weight_matrix(n, beta)
    H = pb.heterogeneous_quadratic_suite(n, 5, 1.0, 0.1, 0.0, 0.0)
    plan = GossipPlan(W, R)
    X = np.random.default_rng(3).standard_normal((n, 5))
    state = op.OptimizerState(X)
    for _ in range(5):
        phi = state.X - 0.1 * H.local_grads(state.X)
        before = ((phi - phi.mean(0)) ** 2).sum()
        state = op.mg_dsgd_step(state, H, plan, 0.1)
        after = ((state.X - state.mean) ** 2).sum()
        assert after <= 2 * (1 - math.sqrt(1 - beta)) ** (2 * R) * before + 1e-14


def test_lr_nonconvex_dsgd_examples():
    assert op.lr_nonconvex_dsgd(8, 1000, 1.0, 0.5, 1.0, 1.0) == pytest.approx(math.sqrt(16 / 1001))
    assert op.lr_nonconvex_dsgd(8, 10, 1.0, 0.0, 1.0, 1.0) == 0.25
    gammas = [op.lr_nonconvex_dsgd(8, K, 1.0, 0.5, 1.0, 1.0) for K in (10**2, 10**4, 10**6)]
    assert gammas[0] >= gammas[1] >= gammas[2]
    assert gammas[2] / gammas[1] == pytest.approx(math.sqrt((10**4 + 1) / (10**6 + 1)))
    with pytest.raises(ValueError):
        op.lr_nonconvex_dsgd(8, 0, 1.0, 0.5, 1.0, 1.0)


def test_lr_nonconvex_mg():
    g = op.lr_nonconvex_mg(8, 1000, 1.0, 0.0, 0.5, 1.0)
    assert g == min(math.sqrt(8) / (0.5 * math.sqrt(1001)), 0.25)
    assert op.lr_nonconvex_mg(8, 1000, 1.0, 0.0, 0.0, 1.0) == 0.25
    assert op.lr_nonconvex_mg(8, 10**6, 1.0, 0.2, 1.0, 1.0) == pytest.approx(math.sqrt(8 / (10**6 + 1)))


def test_lr_pl_examples():
    g = op.lr_pl_dsgd(8, 1000, 1.0, 0.1, 0.5, 1.0, 1.0)
    assert g == pytest.approx(0.1 * 0.5 / (24 * 8 * 0.5), rel=1e-12)
    g0 = op.lr_pl_dsgd(8, 1000, 1.0, 0.1, 0.0, 1.0, 1.0)
    assert g0 == pytest.approx(min(0.04 * math.log(80), 0.25))
    with pytest.raises(ValueError):
        op.lr_pl_dsgd(8, 1000, 1.0, 2.0, 0.5, 1.0, 1.0)


def test_lr_pl_small_K_warns_and_drops_term():
    with pytest.warns(RuntimeWarning):
        g = op.lr_pl_dsgd(1, 2, 1.0, 0.1, 0.0, 1.0, 1.0)
    assert g == 0.25


def test_lr_pl_mg_substitution():
    bt, st = op.mg_substitutions(0.9, 4.0, 4)
    assert st == pytest.approx(1.0)
    assert op.lr_pl_mg(8, 1000, 1.0, 0.1, bt, st, 1.0) == op.lr_pl_dsgd(8, 1000, 1.0, 0.1, bt, st, 1.0)


def test_initial_gap_is_never_estimated():
    with pytest.raises(ValueError):
        op.initial_gap(pb.split_zero_chain_problem(6, 4))
    assert op.initial_gap(pb.split_zero_chain_problem(6, 4), Delta=2.0) == 2.0
    H = hetero()
    assert op.initial_gap(H) == pytest.approx(H.value(np.zeros(5)) - H.f_star)


def test_make_schedule(W12):
    H = hetero(sigma_sq=1.0)
    s = op.make_schedule(H, W12.beta, "mg_dsgd", 1000)
    assert s.R >= 1 and 0 < s.gamma <= 0.25
    assert op.make_schedule(H, W12.beta, "dsgd", 1000).R == 1
    with pytest.raises(ValueError):
        op.make_schedule(hetero(), W12.beta, "mg_dsgd", 1000)
    with pytest.raises(ValueError):
        op.make_schedule(H, W12.beta, "mg_dsgd", 1, R=5)


def test_run_records_and_accounting(W12):
    H = hetero(sigma_sq=1.0)
    recs = op.run(H, W12, "mg_dsgd", op.Schedule(0.05, 3), 100, seed=1)
    assert len(recs) == 100 // 3 + 1
    assert [r.T for r in recs] == [3 * k for k in range(len(recs))]
    assert recs[0].consensus == 0.0 and recs[0].prog is None
    with pytest.raises(ValueError):
        op.run(H, W12, "mg_dsgd", op.Schedule(0.05, 3), 2)


def test_run_is_deterministic(W12):
    H = hetero(sigma_sq=1.0)
    a = op.run(H, W12, "mg_dsgd", op.Schedule(0.05, 3), 60, seed=9)
    b = op.run(H, W12, "mg_dsgd", op.Schedule(0.05, 3), 60, seed=9)
    c = op.run(H, W12, "mg_dsgd", op.Schedule(0.05, 3), 60, seed=10)
    assert op.records_to_csv(a) == op.records_to_csv(b)
    assert op.records_to_csv(a) != op.records_to_csv(c)


def test_run_noise_free_converges(W12):
    H = pb.heterogeneous_quadratic_suite(12, 5, 1.0, 0.1, 0.0, 0.0)
    recs = op.run(H, W12, "dsgd", op.Schedule(0.2), 400)
    sub = [r.subopt for r in recs]
    assert all(b <= a + 1e-15 for a, b in zip(sub, sub[1:]))
    assert sub[-1] < 1e-8 and recs[-1].consensus < 1e-20


def test_run_split_chain_respects_propagation_bound():
    g = ring_lattice(12, 2)
    W = uniform_weight_matrix(g)
    P = pb.split_zero_chain_problem(12, 30, L=50.0)
    dist = op.block_distance(P, g)
    assert dist == 3
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        recs = op.run(P, W, "dsgd", op.Schedule(1.0), 200, seed=0)
    assert all(r.prog <= r.T // dist + 1 for r in recs)
    assert [r.prog for r in recs] == sorted(r.prog for r in recs)


def test_plan_and_schedule_R_must_agree(W12):
    H = hetero(sigma_sq=1.0)
    with pytest.raises(ValueError):
        op.run(H, GossipPlan(W12, 2), "mg_dsgd", op.Schedule(0.1, 3), 30)


def test_csv_format(W12):
    H = pb.split_zero_chain_problem(12, 5)
    W = uniform_weight_matrix(ring_lattice(12, 2))
    text = op.records_to_csv(op.run(H, W, "dsgd", op.Schedule(0.1), 3))
    lines = text.splitlines()
    assert lines[0] == "k,T,grad_norm_sq,subopt,consensus,prog"
    assert len(lines) == 5
    assert lines[1].split(",")[3] == ""


def _synthetic_records(T, values):
    return [op.RunRecord(k, t, v, None, 0.0, None) for k, (t, v) in enumerate(zip(T, values))]


def test_transient_iterations_on_synthetic_curves():
    T = np.arange(1, 2001)
    envelope = 1.0 / np.sqrt(4 * T)
    clean = _synthetic_records(T, envelope)
    assert op.transient_iterations(clean, 1.0, 4) == 1.0
    bumped = envelope * (1 + 50 * np.exp(-T / 40))
    t_star = op.transient_iterations(_synthetic_records(T, bumped), 1.0, 4)
    assert 10 < t_star < 2000
    rising = _synthetic_records(T, np.linspace(0.1, 1.0, T.size))
    assert op.transient_iterations(rising, 1.0, 4) == op.NOT_REACHED
    with pytest.raises(ValueError):
        op.transient_iterations(clean[:3], 1.0, 4)
