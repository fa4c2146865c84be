import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mgdsgd import gossip as gs
from mgdsgd.topology import construct_weight_matrix


@pytest.fixture(scope="module")
def W20():
    return construct_weight_matrix(20, 0.9)[0]


def test_eta_formulas():
    b = 0.8
    assert gs.momentum_eta(b, "paper_eta") == pytest.approx((1 - 0.6) / (1 + math.sqrt(1.64)))
    assert gs.momentum_eta(b, "standard_eta") == pytest.approx(0.4 / 1.6)
    assert gs.momentum_eta(0.0) == 0.0


def test_eta_rejects_beta_one():
    with pytest.raises(ValueError):
        gs.momentum_eta(1.0)


def test_plan_uses_measured_beta(W20):
    plan = gs.GossipPlan(W20, 5)
    assert plan.eta == gs.momentum_eta(W20.beta, gs.DEFAULT_VARIANT)
    assert plan.beta_tilde == pytest.approx(math.sqrt(2) * (1 - math.sqrt(1 - W20.beta)) ** 5)


@pytest.mark.parametrize("kwargs", [{"R": 0}, {"R": 2, "eta": 1.0}, {"R": 2, "eta": -0.1}])
def test_plan_validation(W20, kwargs):
    with pytest.raises(ValueError):
        gs.GossipPlan(W20, **kwargs)


def test_consensus_is_fixed_point(W20):
    phi = np.tile(np.arange(3.0), (20, 1))
    out = gs.fast_gossip_average(phi, gs.GossipPlan(W20, 17))
    assert_allclose(out, phi, atol=1e-12)


def test_zero_rounds_returns_input(W20):
    phi = np.random.default_rng(0).standard_normal((20, 2))
    out = gs.fast_gossip_average(phi, gs.GossipPlan(W20, 3), rounds=0)
    assert np.array_equal(out, phi) and out is not phi


def test_dimension_mismatch(W20):
    with pytest.raises(ValueError):
        gs.fast_gossip_average(np.zeros((19, 2)), gs.GossipPlan(W20, 2))


def test_mean_preserved_every_round(W20):
    phi = np.random.default_rng(1).standard_normal((20, 4))
    means = []
    gs.fast_gossip_average(phi, gs.GossipPlan(W20, 30), callback=lambda r, z: means.append(z.mean(0)))
    assert len(means) == 30
    assert_allclose(np.array(means), np.tile(phi.mean(0), (30, 1)), atol=1e-12)


@pytest.mark.parametrize("variant", list(gs.EtaVariant))
def test_vector_recursion_matches_matrix_polynomial(W20, variant):
    phi = np.random.default_rng(2).standard_normal((20, 3))
    plan = gs.GossipPlan(W20, 12, variant)
    M = gs.mixing_polynomial(W20, plan.eta, 12)
    assert_allclose(gs.fast_gossip_average(phi, plan), M @ phi, atol=1e-10)


def test_mixing_polynomial_small_R(W20):
    eta = 0.3
    assert_allclose(gs.mixing_polynomial(W20, eta, 0), np.eye(20))
    assert_allclose(gs.mixing_polynomial(W20, eta, 1), 1.3 * W20.entries - 0.3 * np.eye(20))
    M = gs.mixing_polynomial(W20, eta, 9)
    assert_allclose(M.sum(axis=0), 1, atol=1e-12)
    assert_allclose(M.sum(axis=1), 1, atol=1e-12)


def test_mixing_polynomial_rejects_negative_R(W20):
    with pytest.raises(ValueError):
        gs.mixing_polynomial(W20, 0.1, -1)


def test_contraction_on_complete_graph_matrix():
    # every disagreement eigenvalue of a complete-graph W equals beta exactly,
    # so the spread after R rounds is the scalar recursion evaluated at beta
    W, _ = construct_weight_matrix(16, 0.5)
    eta = gs.momentum_eta(W.beta)
    a_prev, a = 1.0, 1.0
    for R in range(1, 8):
        a_prev, a = a, (1 + eta) * 0.5 * a - eta * a_prev
        M = gs.mixing_polynomial(W, eta, R)
        assert np.linalg.norm(M - 1 / 16, 2) == pytest.approx(abs(a), rel=1e-9, abs=1e-13)


def test_choose_R_nonconvex_examples():
    assert gs.choose_R_nonconvex(2, 0.0, 0.0, 1.0) == 1
    Rs = [gs.choose_R_nonconvex(16, b, 1.0, 1.0) for b in (0.5, 0.9, 0.99, 0.999)]
    assert Rs == sorted(Rs) and Rs[-1] > Rs[0]
    for beta in (0.3, 0.9, 0.999):
        R = gs.choose_R_nonconvex(64, beta, 2.0, 0.5)
        assert gs.contraction_bound(beta, R) <= 1 / math.sqrt(2) + 1e-15


@pytest.mark.parametrize("args", [(4, 1.0, 0.0, 1.0), (4, 0.5, 0.0, 0.0)])
def test_choose_R_nonconvex_errors(args):
    with pytest.raises(ValueError):
        gs.choose_R_nonconvex(*args)


def test_choose_R_pl_examples():
    assert gs.pl_constants(2, 1.0, 1.0) == (38.0, 42.0)
    assert gs.choose_R_pl(2, 0.0, 0.0, 1.0, 1.0, 1.0) == 3
    for beta in (0.5, 0.95):
        n, L, mu = 8, 1.0, 0.1
        R = gs.choose_R_pl(n, beta, 1.0, 1.0, L, mu)
        assert gs.contraction_bound(beta, R) <= math.sqrt(2) * mu / (n * L) + 1e-15
    assert gs.contraction_bound(0.0, 1) == 0.0


@pytest.mark.parametrize("L,mu", [(1.0, 2.0), (0.0, 0.0), (1.0, -1.0)])
def test_choose_R_pl_errors(L, mu):
    with pytest.raises(ValueError):
        gs.choose_R_pl(4, 0.5, 0.0, 1.0, L, mu)
