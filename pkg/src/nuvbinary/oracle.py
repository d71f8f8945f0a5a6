"""Exhaustive search for the cost-optimal binary input sequence.

Used to measure how far IKIE lands from the true optimum on short horizons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ikie import ikie_solve
from .model import (ConfigurationError, Levels, LtiModel, Scenario, Target, cost,
                    free_response, impulse_matrix, simulate)

MAX_HORIZON = 24
_CHUNK = 1 << 15
_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class OracleResult:
    u_opt: np.ndarray
    cost_opt: float
    ties: int
    enumerated: int


def _sequences(start, stop, K, levels):
    idx = np.arange(start, stop, dtype=np.int64)
    # u_1 is the most significant bit, so index order is lexicographic with a < b
    bits = (idx[:, None] >> np.arange(K - 1, -1, -1, dtype=np.int64)) & 1
    return np.where(bits == 1, levels.b, levels.a)


def brute_force(model: LtiModel, target: Target, levels: Levels = Levels(), K=None) -> OracleResult:
    """Enumerate all ``2**K`` sequences over ``{a, b}`` and return the cheapest.

    Uses the first ``K`` steps of ``target`` (all of it by default).  Ties are
    broken towards the lexicographically smallest sequence.
    """
    K = target.horizon if K is None else int(K)
    if K > MAX_HORIZON:
        raise ConfigurationError(f"brute force refuses K={K} (limit {MAX_HORIZON})")
    target = target.truncate(K)
    L = model.n_outputs
    G = impulse_matrix(model, K)
    resid0 = (target.ybreve.reshape(-1) - free_response(model, K).reshape(-1))
    wrow = np.repeat(target.weights, L)
    keep = wrow > 0
    G, resid0, wrow = G[keep], resid0[keep], wrow[keep]

    total = 1 << K
    costs = np.empty(total)
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        U = _sequences(start, stop, K, levels)
        err = U @ G.T - resid0
        costs[start:stop] = (err**2) @ wrow
    best = int(np.argmin(costs))
    cmin = costs[best]
    ties = int(np.count_nonzero(costs <= cmin + _TIE_RTOL * max(abs(cmin), 1.0)))
    u_opt = _sequences(best, best + 1, K, levels)[0]
    # recompute through the plant so cost_opt matches cost() exactly
    return OracleResult(u_opt, cost(target, simulate(model, u_opt)[1]), ties, total)


@dataclass(frozen=True)
class Comparison:
    K: int
    cost_ikie: float
    cost_opt: float
    ratio: float | None
    gap: float
    hamming: int
    iterations: int
    binary: bool

    @property
    def ratio_or_gap(self):
        return self.ratio if self.ratio is not None else self.gap


def compare(scenario: Scenario, K=None) -> Comparison:
    """Run IKIE and the exhaustive oracle on the first ``K`` steps of ``scenario``."""
    K = scenario.horizon if K is None else int(K)
    if K > MAX_HORIZON:
        raise ConfigurationError(f"oracle comparison refuses K={K} (limit {MAX_HORIZON})")
    sc = scenario.replace(target=scenario.target.truncate(K))
    report = ikie_solve(sc)
    opt = brute_force(sc.model, sc.target, sc.levels)
    scale = max(float(np.sum(sc.target.weights * np.sum(sc.target.ybreve**2, axis=1))), 1.0)
    if opt.cost_opt <= 1e-12 * scale:
        ratio = None
    else:
        ratio = report.cost / opt.cost_opt
    hamming = int(np.count_nonzero(sc.levels.nearest(report.u) != opt.u_opt))
    return Comparison(K, report.cost, opt.cost_opt, ratio, report.cost - opt.cost_opt,
                      hamming, report.iterations, report.binary)


def random_stable_model(rng, N=2):
    """Random single-output plant with spectral radius in [0.5, 0.95]."""
    A = rng.normal(size=(N, N))
    A *= rng.uniform(0.5, 0.95) / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-12)
    B = rng.normal(size=N)
    C = rng.normal(size=(1, N))
    while abs(float((C @ B)[0])) < 0.2:
        B = rng.normal(size=N)
    return LtiModel(A, B, C)


def integrator_model():
    return LtiModel([[1.0]], [1.0], [[1.0]])


def planted_instance(rng, K, kind="integrator", s2=None, levels=Levels()):
    """Scenario whose target is exactly reproduced by a random binary input ``u*``.

    Returns ``(scenario, u_star)``.
    """
    model = integrator_model() if kind == "integrator" else random_stable_model(rng)
    u_star = np.where(rng.integers(0, 2, K) == 1, levels.b, levels.a)
    y = simulate(model, u_star)[1]
    s2 = planted_s2(model, levels) if s2 is None else s2
    sc = Scenario(model, Target(y), levels, s2=s2, name=f"planted-{kind}")
    return sc, u_star


def planted_s2(model, levels):
    """Likelihood variance for planted instances: a tenth of the energy one level step injects."""
    markov = np.asarray(model.C @ model.B).reshape(-1)
    return 0.1 * levels.gap**2 * max(float(markov @ markov), 1e-12)


def random_instance(rng, K, levels=Levels()):
    """Random stable plant with a smooth random target inside the reachable band."""
    model = random_stable_model(rng)
    lo = simulate(model, np.full(K, levels.a))[1][:, 0]
    hi = simulate(model, np.full(K, levels.b))[1][:, 0]
    mix = 0.5 + 0.4 * np.sin(2 * np.pi * (np.arange(K) / K + rng.uniform()))
    y = lo + mix * (hi - lo)
    return Scenario(model, Target(y), levels, s2=planted_s2(model, levels), name="random")
