import math

import numpy as np
import pytest

sa = pytest.importorskip("stochad")


def test_triple_arithmetic():
    x = sa.make_input(0.6)
    y = x * x
    assert y.value == pytest.approx(0.36)
    assert y.delta == pytest.approx(1.2)
    assert sa.derivative_contribution(sa.cube(sa.StochasticTriple(2.0, 0.0, sa.Perturbation(-1.0, 8.0, 1)))) == -56.0
    assert "0.36" in repr(y)


def test_distribution_helpers():
    w = sa.discrete_weights(sa.Binomial(10, 0.6), 6)
    assert w.up == pytest.approx(10.0)
    assert w.down == 0.0
    assert sa.inversion_quantile(sa.Geometric(0.5), 0.8) == 2
    assert sa.pmf(sa.Poisson(2.0), 0) == pytest.approx(math.exp(-2.0))
    with pytest.raises(ValueError):
        sa.inversion_quantile(sa.Bernoulli(1.5), 0.5)


def test_smoothing_helpers():
    assert sa.new_weight(sa.SmoothedDual(0.25, 1.0)).sderiv == pytest.approx(4.0)
    assert sa.smooth_bernoulli(sa.SmoothedDual(0.6, 1.0), 0, sa.SmoothingFlavor.right).sderiv == pytest.approx(2.5)


def test_estimators_are_unbiased_and_deterministic():
    s = sa.estimate_mean(sa.binomial_experiment(10), 0.6, seed=1, samples=20000, threads=4)
    assert abs(s.mean - 10.0) < 4 * s.std_error
    again = sa.estimate_mean(sa.binomial_experiment(10), 0.6, seed=1, samples=20000, threads=1)
    assert again.mean == s.mean
    toy = sa.estimate_mean(sa.toy_experiment(), 0.6, seed=2, samples=20000, threads=4)
    assert abs(toy.mean - 203.04) < 4 * toy.std_error
    score = sa.score_function(sa.walk_traced(2, 2.0), 2.0, seed=3, samples=20000, cv=sa.ControlVariate.batch_mean)
    assert abs(score.mean - math.exp(-0.5)) < 4 * score.std_error
    fd = sa.finite_difference(sa.walk_experiment(2, 2.0), 2.0, 0.1, seed=4, samples=100)
    assert fd.estimator == "fd_common"


def test_hmm_bindings():
    cfg = sa.HmmConfig()
    cfg.dim = 2
    model = sa.make_hmm_model(cfg, 7)
    traj = sa.simulate_hmm(model, 10, 7)
    assert traj.observations.shape == (10, 2)
    theta = sa.theta_of(model.phi)
    loglik, grad = sa.kalman_loglik_and_grad(model, traj.observations, theta)
    assert np.isfinite(loglik) and len(grad) == 4
    pf_loglik, pf_grad = sa.particle_filter_gradient(model, traj.observations, theta, 200, 8)
    assert abs(pf_loglik - loglik) < 5.0
    assert len(pf_grad) == 4
