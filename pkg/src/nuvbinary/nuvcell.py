"""Scalar binary-enforcing NUV prior.

The prior ``N(x; a, sigma1_sq) * N(x; b, sigma2_sq)`` is, for fixed variances,
a scaled Gaussian in ``x``.  Estimating the two variances either by joint MAP
(alternating maximization, "am") or by type-II evidence maximization
(expectation maximization, "em") drives ``x`` towards one of the levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .model import ConfigurationError, Levels, METHODS

#: Default iteration budget for scalar fixed points.  EM approaches a level
#: sublinearly (the active variance shrinks like ``1/i``), so 1e4 iterations
#: leave ``x_hat`` about 1e-2 away from the level near the threshold.
CHARACTERISTIC_MAX_ITERS = 2_000_000
CHARACTERISTIC_TOL = 1e-9


@dataclass(frozen=True)
class NuvPair:
    sigma1_sq: float
    sigma2_sq: float

    def __post_init__(self):
        for name in ("sigma1_sq", "sigma2_sq"):
            v = float(getattr(self, name))
            if not (np.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name}: must be positive and finite, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def symmetric(cls, levels: Levels) -> "NuvPair":
        """Unbiased starting point: both variances equal to ``(b - a)**2``."""
        return cls(levels.gap**2, levels.gap**2)


@dataclass(frozen=True)
class GaussMsg:
    mean: float
    var: float

    def __post_init__(self):
        var = float(self.var)
        if not var > 0 or np.isnan(var):
            raise ConfigurationError(f"GaussMsg.var: must be > 0, got {var}")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "var", var)


def default_floor(levels: Levels) -> float:
    return 1e-12 * levels.gap**2


def prior_as_gaussian(levels: Levels, sigma1_sq, sigma2_sq):
    """Mean and variance of the Gaussian proportional to the NUV prior.

    Works elementwise on arrays.  Returns ``(mean, var)``.
    """
    s1 = np.asarray(sigma1_sq, dtype=float)
    s2 = np.asarray(sigma2_sq, dtype=float)
    var = 1.0 / (1.0 / s1 + 1.0 / s2)
    mean = var * (levels.a / s1 + levels.b / s2)
    return mean, var


def prior_message(levels: Levels, pair: NuvPair) -> GaussMsg:
    mean, var = prior_as_gaussian(levels, pair.sigma1_sq, pair.sigma2_sq)
    return GaussMsg(float(mean), float(var))


def prior_log_scale(levels: Levels, sigma1_sq, sigma2_sq):
    """Log of the constant ``N(a; b, sigma1_sq + sigma2_sq)``.

    ``N(x; a, s1) N(x; b, s2)`` equals this constant times the Gaussian from
    :func:`prior_as_gaussian`.
    """
    tot = np.asarray(sigma1_sq, dtype=float) + np.asarray(sigma2_sq, dtype=float)
    return -0.5 * (np.log(2 * np.pi * tot) + levels.gap**2 / tot)


def am_update(u_hat, levels: Levels, floor=None):
    """Joint-MAP variance update ``sigma_i^2 = (u_hat - level_i)^2``.

    Returns ``(sigma1_sq, sigma2_sq)``, elementwise for array input.
    """
    floor = default_floor(levels) if floor is None else floor
    u = np.asarray(u_hat, dtype=float)
    return (np.maximum((u - levels.a) ** 2, floor),
            np.maximum((u - levels.b) ** 2, floor))


def em_update(u_hat, v_u, levels: Levels, floor=None):
    """Type-II (EM) variance update ``sigma_i^2 = V_U + (u_hat - level_i)^2``."""
    floor = default_floor(levels) if floor is None else floor
    u = np.asarray(u_hat, dtype=float)
    v = np.asarray(v_u, dtype=float)
    if np.any(v < 0):
        raise ConfigurationError("v_u: posterior variance must be >= 0")
    return (np.maximum(v + (u - levels.a) ** 2, floor),
            np.maximum(v + (u - levels.b) ** 2, floor))


def scalar_posterior(lik: GaussMsg, prior: GaussMsg):
    """Combine two Gaussian messages on the same variable by adding precisions."""
    prec = 1.0 / lik.var + 1.0 / prior.var
    var = 1.0 / prec
    return var * (lik.mean / lik.var + prior.mean / prior.var), var


@numba.njit(cache=True)
def _fixed_point(mu, s2, a, b, em, s1, s2b, max_iters, tol, floor):
    x_prev = np.inf
    x = mu
    for i in range(max_iters):
        var = 1.0 / (1.0 / s2 + 1.0 / s1 + 1.0 / s2b)
        x = var * (mu / s2 + a / s1 + b / s2b)
        extra = var if em else 0.0
        s1 = max(extra + (x - a) ** 2, floor)
        s2b = max(extra + (x - b) ** 2, floor)
        if abs(x - x_prev) < tol:
            return x, i + 1, True
        x_prev = x
    return x, max_iters, False


@numba.njit(cache=True)
def _fixed_point_grid(mus, s2, a, b, em, s1, s2b, max_iters, tol, floor):
    n = mus.shape[0]
    xs = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    conv = np.empty(n, dtype=np.bool_)
    for j in range(n):
        xs[j], iters[j], conv[j] = _fixed_point(mus[j], s2, a, b, em, s1, s2b,
                                                max_iters, tol, floor)
    return xs, iters, conv


@dataclass(frozen=True)
class CharacteristicPoint:
    method: str
    s2: float
    mu: float
    x_hat: float
    converged: bool
    iterations: int
    binary: bool


def _check_method(method):
    method = str(method).lower()
    if method not in METHODS:
        raise ConfigurationError(f"method: must be one of {METHODS}, got {method!r}")
    return method


def characteristic(mu, s2, levels: Levels = Levels(), method="em", init: NuvPair | None = None,
                   max_iters=CHARACTERISTIC_MAX_ITERS, tol=CHARACTERISTIC_TOL, floor=None):
    """Fixed-point estimate of a single binary NUV cell observed as ``N(x; mu, s2)``.

    Alternates the scalar posterior with the AM or EM variance update until
    successive estimates differ by less than ``tol``.  Returns
    ``(x_hat, converged)``; on non-convergence the last iterate is returned.
    """
    method = _check_method(method)
    if not s2 > 0:
        raise ConfigurationError(f"s2: must be > 0, got {s2}")
    init = NuvPair.symmetric(levels) if init is None else init
    floor = default_floor(levels) if floor is None else floor
    x, _, conv = _fixed_point(float(mu), float(s2), levels.a, levels.b, method == "em",
                              init.sigma1_sq, init.sigma2_sq, int(max_iters), float(tol),
                              float(floor))
    return float(x), bool(conv)


def sweep_characteristic(mu_grid, s2_list, levels: Levels = Levels(), method="em",
                         init: NuvPair | None = None, max_iters=CHARACTERISTIC_MAX_ITERS,
                         tol=CHARACTERISTIC_TOL, tol_binary=None, floor=None):
    """Evaluate :func:`characteristic` on every ``(s2, mu)`` grid point.

    Returns a list of :class:`CharacteristicPoint`, ordered by ``s2`` then ``mu``.
    """
    method = _check_method(method)
    mus = np.asarray(mu_grid, dtype=float).reshape(-1)
    s2s = np.asarray(s2_list, dtype=float).reshape(-1)
    if mus.size == 0 or s2s.size == 0:
        raise ConfigurationError("sweep_characteristic: grids must be nonempty")
    if np.any(s2s <= 0):
        raise ConfigurationError("sweep_characteristic: every s2 must be > 0")
    init = NuvPair.symmetric(levels) if init is None else init
    floor = default_floor(levels) if floor is None else floor
    tol_binary = 1e-3 * levels.gap if tol_binary is None else tol_binary
    rows = []
    for s2 in s2s:
        xs, iters, conv = _fixed_point_grid(mus, float(s2), levels.a, levels.b, method == "em",
                                            init.sigma1_sq, init.sigma2_sq, int(max_iters),
                                            float(tol), float(floor))
        binary = levels.residual(xs) <= tol_binary
        rows.extend(CharacteristicPoint(method, float(s2), float(m), float(x), bool(c), int(n),
                                        bool(f))
                    for m, x, c, n, f in zip(mus, xs, conv, iters, binary))
    return rows
