import itertools

import numpy as np
import pytest

from nuvbinary.model import ConfigurationError, Levels, LtiModel, Scenario, Target, cost, simulate
from nuvbinary.oracle import (MAX_HORIZON, brute_force, compare, planted_instance,
                              random_instance)


def test_single_step_example(integrator):
    res = brute_force(integrator, Target([0.8]))
    assert res.u_opt.tolist() == [1.0]
    assert res.cost_opt == pytest.approx(0.04)
    assert res.enumerated == 2 and res.ties == 1


def test_tie_counts_and_breaks_towards_a(integrator):
    res = brute_force(integrator, Target([0.5]))
    assert res.ties == 2
    assert res.u_opt.tolist() == [0.0]


def test_matches_naive_enumeration():
    rng = np.random.default_rng(0)
    m = LtiModel([[0.6, 0.3], [-0.2, 0.9]], [1.0, 0.5], [[1.0, -1.0], [0.2, 0.4]], x0=[0.3, 0.0])
    K = 7
    t = Target(rng.normal(size=(K, 2)), rng.uniform(0, 2, size=K))
    lv = Levels(-1.0, 0.5)
    best = min((cost(t, simulate(m, np.array(u))[1]), u)
               for u in itertools.product([lv.a, lv.b], repeat=K))
    res = brute_force(m, t, lv)
    assert res.cost_opt == pytest.approx(best[0])
    assert res.u_opt.tolist() == list(best[1])


def test_planted_has_zero_cost_optimum():
    rng = np.random.default_rng(4)
    sc, u_star = planted_instance(rng, 10, "stable")
    res = brute_force(sc.model, sc.target, sc.levels)
    assert res.cost_opt == pytest.approx(0.0, abs=1e-20)
    assert np.array_equal(res.u_opt, u_star)


def test_relabel_reflection_on_integrator(integrator):
    rng = np.random.default_rng(5)
    y = np.cumsum(rng.uniform(0, 1, 9))
    res = brute_force(integrator, Target(y), Levels(0, 1))
    mirrored = brute_force(integrator, Target(-y), Levels(-1, 0))
    assert np.array_equal(mirrored.u_opt, -res.u_opt) or mirrored.ties > 1
    assert mirrored.cost_opt == pytest.approx(res.cost_opt)


def test_guard(integrator):
    with pytest.raises(ConfigurationError, match="24"):
        brute_force(integrator, Target(np.zeros(MAX_HORIZON + 1)))


def test_compare_planted():
    rng = np.random.default_rng(11)
    sc, _ = planted_instance(rng, 12, "integrator")
    c = compare(sc)
    assert c.ratio is None and c.gap == pytest.approx(0.0, abs=1e-12)
    assert c.hamming == 0 and c.binary


@pytest.mark.parametrize("seed", range(5))
def test_random_instances_never_beat_oracle(seed):
    rng = np.random.default_rng(seed)
    c = compare(random_instance(rng, 12))
    if c.binary:
        assert c.cost_ikie >= c.cost_opt - 1e-12
        assert c.ratio is None or c.ratio >= 1 - 1e-12


def test_compare_truncates(integrator):
    sc = Scenario(integrator, Target(np.arange(30) * 0.5))
    assert compare(sc, K=6).K == 6
    with pytest.raises(ConfigurationError):
        compare(sc)
