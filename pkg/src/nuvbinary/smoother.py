"""Gaussian input estimation for a linear plant.

Given independent Gaussian priors ``u_k ~ N(m_k, V_k)`` and observations
``ybreve_k ~ N(C x_k, r_k I)``, :func:`smooth` returns the exact posterior
means and variances of every ``u_k`` together with the log evidence.

The recursion is a covariance Kalman filter followed by a modified
Bryson-Frazier backward pass.  Multi-output steps are processed as ``L``
scalar updates, so neither pass inverts a matrix.  The initial state is
exact (zero covariance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy import linalg
from scipy.stats import multivariate_normal

from .model import ConfigurationError, LtiModel, Target, free_response, impulse_matrix

BATCH_MAX_HORIZON = 200


class SmootherError(ArithmeticError):
    """Non-finite or non-positive quantity inside the recursions."""

    def __init__(self, step, message="non-finite intermediate"):
        self.step = int(step)
        super().__init__(f"{message} at step k={self.step + 1}")


@dataclass(frozen=True, eq=False)
class InputPrior:
    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        var = np.asarray(self.var, dtype=float).reshape(-1)
        if mean.shape != var.shape:
            raise ConfigurationError("InputPrior: mean and var lengths differ")
        if np.any(~(var > 0)):
            raise ConfigurationError("InputPrior: variances must be > 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)

    def __len__(self):
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class InputPosterior:
    mean: np.ndarray
    var: np.ndarray

    def __len__(self):
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class ObsSpec:
    """Targets with per-step observation variance; ``r_k = inf`` skips step ``k``."""

    target: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.target, dtype=float)
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        r = np.asarray(self.r, dtype=float).reshape(-1)
        if r.shape[0] != y.shape[0]:
            raise ConfigurationError("ObsSpec: target and r lengths differ")
        if np.any(~(r > 0)):
            raise ConfigurationError("ObsSpec: observation variances must be > 0 (inf to skip)")
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "r", r)

    @classmethod
    def from_target(cls, target: Target, s2: float) -> "ObsSpec":
        w = target.weights
        with np.errstate(divide="ignore"):
            r = np.where(w > 0, s2 / np.where(w > 0, w, 1.0), np.inf)
        return cls(target.ybreve, r)

    @property
    def observed(self):
        return np.isfinite(self.r)

    def __len__(self):
        return self.r.shape[0]


@numba.njit(cache=True)
def _mbf(A, B, C, d, x0, Y, r, obs, mu, vu):
    K = Y.shape[0]
    N = A.shape[0]
    L = C.shape[0]
    gains = np.zeros((K, L, N))
    gs = np.ones((K, L))
    es = np.zeros((K, L))
    m = x0.copy()
    P = np.zeros((N, N))
    T = np.zeros((N, N))
    tmp = np.zeros(N)
    Pc = np.zeros(N)
    loglik = 0.0
    uh = np.empty(K)
    vh = np.empty(K)
    # forward: covariance Kalman filter with the input prior as process noise
    for k in range(K):
        for i in range(N):
            s = d[i] + B[i] * mu[k]
            for j in range(N):
                s += A[i, j] * m[j]
            tmp[i] = s
        m[:] = tmp
        for i in range(N):
            for j in range(N):
                s = 0.0
                for q in range(N):
                    s += A[i, q] * P[q, j]
                T[i, j] = s
        for i in range(N):
            for j in range(i, N):
                s = vu[k] * B[i] * B[j]
                for q in range(N):
                    s += T[i, q] * A[j, q]
                P[i, j] = s
                P[j, i] = s
        if obs[k]:
            for l in range(L):
                g = r[k]
                e = Y[k, l]
                for i in range(N):
                    s = 0.0
                    for j in range(N):
                        s += P[i, j] * C[l, j]
                    Pc[i] = s
                    g += C[l, i] * s
                    e -= C[l, i] * m[i]
                if not (g > 0.0 and np.isfinite(g) and np.isfinite(e)):
                    return uh, vh, loglik, k
                for i in range(N):
                    kk = Pc[i] / g
                    gains[k, l, i] = kk
                    m[i] += kk * e
                for i in range(N):
                    for j in range(i, N):
                        v = P[i, j] - Pc[i] * Pc[j] / g
                        P[i, j] = v
                        P[j, i] = v
                gs[k, l] = g
                es[k, l] = e
                loglik -= 0.5 * (np.log(2.0 * np.pi * g) + e * e / g)
    # backward: dual mean lam and dual precision Lam (posterior = m - P lam)
    lam = np.zeros(N)
    Lam = np.zeros((N, N))
    W = np.zeros((N, N))
    for k in range(K - 1, -1, -1):
        if obs[k]:
            for l in range(L - 1, -1, -1):
                g = gs[k, l]
                kl = 0.0
                for i in range(N):
                    kl += gains[k, l, i] * lam[i]
                for i in range(N):
                    lam[i] = lam[i] - C[l, i] * (kl + es[k, l] / g)
                for i in range(N):
                    s = 0.0
                    for j in range(N):
                        s += Lam[i, j] * gains[k, l, j]
                    tmp[i] = s
                kLk = 0.0
                for i in range(N):
                    kLk += gains[k, l, i] * tmp[i]
                for i in range(N):
                    for j in range(i, N):
                        v = (Lam[i, j] - tmp[i] * C[l, j] - C[l, i] * tmp[j]
                             + C[l, i] * C[l, j] * (kLk + 1.0 / g))
                        Lam[i, j] = v
                        Lam[j, i] = v
        bl = 0.0
        bLb = 0.0
        for i in range(N):
            bl += B[i] * lam[i]
            for j in range(N):
                bLb += B[i] * Lam[i, j] * B[j]
        uh[k] = mu[k] - vu[k] * bl
        vh[k] = vu[k] - vu[k] * vu[k] * bLb
        if not (np.isfinite(uh[k]) and np.isfinite(vh[k])):
            return uh, vh, loglik, k
        for i in range(N):
            s = 0.0
            for j in range(N):
                s += A[j, i] * lam[j]
            tmp[i] = s
        lam[:] = tmp
        for i in range(N):
            for j in range(N):
                s = 0.0
                for q in range(N):
                    s += A[q, i] * Lam[q, j]
                W[i, j] = s
        for i in range(N):
            for j in range(i, N):
                s = 0.0
                for q in range(N):
                    s += W[i, q] * A[q, j]
                Lam[i, j] = s
                Lam[j, i] = s
    return uh, vh, loglik, -1


def _check(model: LtiModel, obs: ObsSpec, prior: InputPrior):
    if len(obs) != len(prior):
        raise ConfigurationError(f"horizon mismatch: {len(obs)} observations, {len(prior)} priors")
    if obs.target.shape[1] != model.n_outputs:
        raise ConfigurationError(
            f"observation width {obs.target.shape[1]} != model outputs {model.n_outputs}")


def smooth_with_evidence(model: LtiModel, obs: ObsSpec, prior: InputPrior):
    """Posterior input moments and log evidence from a single forward-backward pass."""
    _check(model, obs, prior)
    observed = obs.observed
    r = np.where(observed, obs.r, 1.0)
    uh, vh, ll, bad = _mbf(model.A, model.B, model.C, model.d, model.x0, obs.target, r,
                           observed, prior.mean, prior.var)
    if bad >= 0:
        raise SmootherError(bad)
    # roundoff can push a vanishing variance slightly negative
    np.maximum(vh, 0.0, out=vh)
    return InputPosterior(uh, vh), float(ll)


def smooth(model: LtiModel, obs: ObsSpec, prior: InputPrior) -> InputPosterior:
    """Exact posterior means and variances of the inputs, in O(K) time."""
    return smooth_with_evidence(model, obs, prior)[0]


def log_evidence(model: LtiModel, obs: ObsSpec, prior: InputPrior) -> float:
    """``log int p(ybreve | u) prod_k N(u_k; m_k, V_k) du`` by prediction-error decomposition."""
    return smooth_with_evidence(model, obs, prior)[1]


def _dense_system(model, obs, prior):
    _check(model, obs, prior)
    K = len(prior)
    if K > BATCH_MAX_HORIZON:
        raise ConfigurationError(
            f"dense oracle refuses K={K} (limit {BATCH_MAX_HORIZON})")
    L = model.n_outputs
    G = impulse_matrix(model, K)
    g0 = free_response(model, K).reshape(-1)
    rows = np.repeat(obs.observed, L)
    y = obs.target.reshape(-1)[rows]
    noise = np.repeat(obs.r, L)[rows]
    return G[rows], g0[rows], y, noise


def batch_posterior(model: LtiModel, obs: ObsSpec, prior: InputPrior) -> InputPosterior:
    """Dense reference for :func:`smooth` built from the stacked map ``y = G u + g0``."""
    G, g0, y, noise = _dense_system(model, obs, prior)
    # information form so that infinite prior variances are allowed
    prec = np.diag(1.0 / prior.var) + G.T @ (G / noise[:, None])
    info = prior.mean / prior.var + G.T @ ((y - g0) / noise)
    factor = linalg.cho_factor(prec, lower=True)
    mean = linalg.cho_solve(factor, info)
    cov = linalg.cho_solve(factor, np.eye(prec.shape[0]))
    return InputPosterior(mean, np.diag(cov).copy())


def batch_log_evidence(model: LtiModel, obs: ObsSpec, prior: InputPrior) -> float:
    """Dense multivariate-normal log density of the observed targets."""
    G, g0, y, noise = _dense_system(model, obs, prior)
    if y.size == 0:
        return 0.0
    mean = G @ prior.mean + g0
    cov = (G * prior.var) @ G.T + np.diag(noise)
    return float(multivariate_normal(mean, cov).logpdf(y))
