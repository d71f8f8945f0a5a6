import time

import numpy as np
import pytest
from scipy.stats import norm

from conftest import random_model
from nuvbinary.model import ConfigurationError, LtiModel, Target, free_response, impulse_matrix
from nuvbinary.scenarios import DAC_A, DAC_B, DAC_C
from nuvbinary.smoother import (InputPrior, ObsSpec, SmootherError, batch_log_evidence,
                                batch_posterior, log_evidence, smooth, smooth_with_evidence)


def random_problem(rng, N, L, K, radius):
    m = random_model(rng, N, L, radius)
    y = rng.normal(size=(K, L)) * 2
    r = rng.uniform(0.05, 3.0, size=K)
    r[rng.uniform(size=K) < 0.3] = np.inf
    prior = InputPrior(rng.normal(size=K), rng.uniform(0.01, 5.0, size=K))
    return m, ObsSpec(y, r), prior


def test_scalar_example(integrator):
    obs = ObsSpec([[1.0]], [1.0])
    post, ll = smooth_with_evidence(integrator, obs, InputPrior([0.0], [1.0]))
    assert post.mean[0] == pytest.approx(0.5)
    assert post.var[0] == pytest.approx(0.5)
    assert ll == pytest.approx(norm.logpdf(1.0, 0.0, np.sqrt(2.0)))


def test_no_observations_returns_prior(integrator):
    prior = InputPrior([0.3, -1.0, 2.0], [1.0, 0.5, 4.0])
    obs = ObsSpec(np.zeros((3, 1)), [np.inf] * 3)
    post, ll = smooth_with_evidence(integrator, obs, prior)
    assert np.array_equal(post.mean, prior.mean)
    assert np.array_equal(post.var, prior.var)
    assert ll == 0.0
    assert batch_log_evidence(integrator, obs, prior) == 0.0


def test_from_target_skips_zero_weights():
    obs = ObsSpec.from_target(Target([1.0, 2.0, 3.0], [1.0, 0.0, 4.0]), 0.5)
    assert obs.r.tolist() == [0.5, np.inf, 0.125]


def test_small_random_matches_batch():
    rng = np.random.default_rng(6)
    m, obs, prior = random_problem(rng, 2, 1, 6, 0.9)
    a, b = smooth(m, obs, prior), batch_posterior(m, obs, prior)
    assert np.allclose(a.mean, b.mean, rtol=1e-10)
    assert np.allclose(a.var, b.var, rtol=1e-10)


def test_oracle_equivalence_many_instances():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    for _ in range(150):
        N, L, K = rng.integers(1, 5), rng.integers(1, 3), rng.integers(1, 31)
        radius = rng.choice([0.5, 0.95, 1.0, 1.1])
        m, obs, prior = random_problem(rng, N, L, K, radius)
        post, ll = smooth_with_evidence(m, obs, prior)
        ref = batch_posterior(m, obs, prior)
        # atol only matters for entries that cancel to ~0
        np.testing.assert_allclose(post.mean, ref.mean, rtol=1e-8, atol=1e-12)
        np.testing.assert_allclose(post.var, ref.var, rtol=1e-8, atol=1e-12)
        assert ll == pytest.approx(batch_log_evidence(m, obs, prior), rel=1e-8, abs=1e-6)
        assert np.all(post.var >= 0) and np.all(post.var <= prior.var + 1e-10)
    assert time.perf_counter() - t0 < 10


def test_batch_impulse_matrix_and_least_squares():
    m = LtiModel([[0.5, 0.2], [0.0, 0.8]], [1.0, 1.0], [[1.0, 0.0]], x0=[1.0, -1.0])
    K = 2
    G = impulse_matrix(m, K)
    u_true = np.array([0.3, -0.7])
    y = G @ u_true + free_response(m, K).reshape(-1)
    post = batch_posterior(m, ObsSpec(y, [1e-3, 1e-3]), InputPrior([0, 0], [1e12, 1e12]))
    assert np.allclose(post.mean, u_true, atol=1e-6)


def test_evidence_drops_when_mismatched_observation_tightens(integrator):
    prior = InputPrior([0.0, 0.0], [1.0, 1.0])
    y = [[10.0], [20.0]]
    lls = [log_evidence(integrator, ObsSpec(y, [1.0, r]), prior) for r in (4.0, 1.0, 0.25, 0.05)]
    assert all(b < a for a, b in zip(lls, lls[1:]))


def test_dac_plant_matches_batch():
    m = LtiModel(DAC_A, DAC_B, DAC_C)
    rng = np.random.default_rng(1)
    K = 60
    obs = ObsSpec(rng.uniform(0, 1, size=K), np.full(K, 0.045))
    prior = InputPrior(rng.uniform(0, 1, size=K), rng.uniform(1e-4, 1.0, size=K))
    a, b = smooth(m, obs, prior), batch_posterior(m, obs, prior)
    np.testing.assert_allclose(a.mean, b.mean, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(a.var, b.var, rtol=1e-7, atol=1e-10)


def test_linear_scaling():
    m = LtiModel(DAC_A, DAC_B, DAC_C)

    def per_call(K):
        obs = ObsSpec(np.full(K, 0.5), np.full(K, 0.045))
        prior = InputPrior(np.full(K, 0.5), np.full(K, 0.5))
        smooth(m, obs, prior)
        best = np.inf
        for _ in range(7):
            t0 = time.perf_counter()
            for _ in range(20):
                smooth(m, obs, prior)
            best = min(best, time.perf_counter() - t0)
        return best

    ratio = per_call(2000) / per_call(1000)
    assert 1.5 <= ratio <= 2.5, ratio


def test_errors(integrator):
    with pytest.raises(ConfigurationError):
        smooth(integrator, ObsSpec([[1.0]], [1.0]), InputPrior([0.0, 0.0], [1.0, 1.0]))
    with pytest.raises(ConfigurationError):
        InputPrior([0.0], [0.0])
    with pytest.raises(ConfigurationError):
        ObsSpec([[1.0]], [0.0])
    with pytest.raises(ConfigurationError):
        batch_posterior(integrator, ObsSpec(np.zeros(201), np.ones(201)),
                        InputPrior(np.zeros(201), np.ones(201)))
    blowup = LtiModel([[1e200]], [1.0], [[1.0]], x0=[1e200])
    with pytest.raises(SmootherError) as info:
        smooth(blowup, ObsSpec(np.zeros(5), np.ones(5)), InputPrior(np.zeros(5), np.ones(5)))
    assert info.value.step >= 0
