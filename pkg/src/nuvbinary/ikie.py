"""Iterative Kalman input estimation (IKIE).

Each iteration smooths the inputs under the current per-step NUV variances
(step 1) and then re-estimates those variances in closed form (step 2), by
alternating maximization (``"am"``) or expectation maximization (``"em"``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import nuvcell
from .model import Scenario, cost, input_influence, simulate
from .smoother import InputPrior, ObsSpec, SmootherError, smooth_with_evidence

log = logging.getLogger(__name__)

#: Inputs whose influence on the weighted outputs is below this fraction of the
#: largest influence are treated as structurally free.
FREE_INPUT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class NuvState:
    """Per-step variance pairs of the binary NUV prior."""

    sigma1_sq: np.ndarray
    sigma2_sq: np.ndarray
    clipped: int = 0

    @classmethod
    def initial(cls, K, levels):
        v = np.full(K, levels.gap**2)
        return cls(v, v.copy())

    def __len__(self):
        return self.sigma1_sq.shape[0]

    def input_prior(self, levels) -> InputPrior:
        mean, var = nuvcell.prior_as_gaussian(levels, self.sigma1_sq, self.sigma2_sq)
        return InputPrior(mean, var)


def _count_clipped(raw1, raw2, floor):
    return int(np.count_nonzero(raw1 < floor) + np.count_nonzero(raw2 < floor))


def am_step(posterior, levels, floor=None) -> NuvState:
    """Elementwise joint-MAP update from the posterior means."""
    floor = nuvcell.default_floor(levels) if floor is None else floor
    u = posterior.mean
    raw1, raw2 = (u - levels.a) ** 2, (u - levels.b) ** 2
    s1, s2 = nuvcell.am_update(u, levels, floor)
    return NuvState(s1, s2, _count_clipped(raw1, raw2, floor))


def em_step(posterior, levels, floor=None) -> NuvState:
    """Elementwise EM update from posterior means and variances."""
    floor = nuvcell.default_floor(levels) if floor is None else floor
    u, v = posterior.mean, posterior.var
    raw1, raw2 = v + (u - levels.a) ** 2, v + (u - levels.b) ** 2
    s1, s2 = nuvcell.em_update(u, v, levels, floor)
    return NuvState(s1, s2, _count_clipped(raw1, raw2, floor))


def log_likelihood(scenario: Scenario, u) -> float:
    """``log p(ybreve | u)`` with per-step variance ``s2 / w_k``."""
    _, y = simulate(scenario.model, u)
    w = scenario.target.weights
    on = w > 0
    r = scenario.s2 / w[on]
    err = np.sum((y[on] - scenario.target.ybreve[on]) ** 2, axis=1)
    L = y.shape[1]
    return float(-0.5 * np.sum(L * np.log(2 * np.pi * r) + err / r))


def joint_map_objective(scenario: Scenario, u, theta: NuvState) -> float:
    """``log p(ybreve | u) + sum_k log N(u_k; a, s1_k) + log N(u_k; b, s2_k)``."""
    lv = scenario.levels
    floor = scenario.variance_floor
    u = np.asarray(u, dtype=float)
    s1 = np.maximum(theta.sigma1_sq, floor)
    s2 = np.maximum(theta.sigma2_sq, floor)
    prior = (-0.5 * (np.log(2 * np.pi * s1) + (u - lv.a) ** 2 / s1)
             - 0.5 * (np.log(2 * np.pi * s2) + (u - lv.b) ** 2 / s2))
    return log_likelihood(scenario, u) + float(np.sum(prior))


def type2_objective(scenario: Scenario, theta: NuvState, obs: ObsSpec | None = None) -> float:
    """Log evidence ``log int p(ybreve | u) rho(u, theta) du`` including the NUV scale factors."""
    obs = ObsSpec.from_target(scenario.target, scenario.s2) if obs is None else obs
    _, ll = smooth_with_evidence(scenario.model, obs, theta.input_prior(scenario.levels))
    return ll + _prior_scale(scenario, theta)


def _prior_scale(scenario, theta):
    return float(np.sum(nuvcell.prior_log_scale(scenario.levels, theta.sigma1_sq,
                                                theta.sigma2_sq)))


def free_inputs(scenario: Scenario) -> np.ndarray:
    """Mask of inputs that cannot change any weighted output."""
    infl = input_influence(scenario.model, scenario.target.weights)
    top = infl.max()
    if top <= 0:
        return np.ones_like(infl, dtype=bool)
    return infl <= FREE_INPUT_RTOL * top


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of one IKIE run.

    ``u`` is snapped to the levels when every non-free input lies within
    ``tol_binary`` of a level; otherwise it equals ``u_raw``.  Free inputs
    (no effect on any weighted output) are set to ``a`` when snapping.
    ``trace`` holds the log evidence at the variances each smoothing pass
    used (EM) or the joint MAP objective after each update (AM).
    """

    u: np.ndarray
    u_raw: np.ndarray
    v_u: np.ndarray
    y: np.ndarray
    cost: float
    iterations: int
    converged: bool
    binary: bool
    binary_residual: float
    free_inputs: np.ndarray
    theta: NuvState
    method: str
    s2: float
    trace: np.ndarray
    residual_trace: np.ndarray
    delta_trace: np.ndarray
    clip_trace: np.ndarray
    notes: tuple = field(default=())

    @property
    def trace_kind(self):
        return "log_evidence" if self.method == "em" else "joint_map_objective"

    def to_dict(self):
        return {
            "method": self.method,
            "s2": self.s2,
            "iterations": self.iterations,
            "converged": self.converged,
            "binary": self.binary,
            "binary_residual": self.binary_residual,
            "cost": self.cost,
            "free_inputs": int(np.count_nonzero(self.free_inputs)),
            "clip_events": int(np.sum(self.clip_trace)),
            "u": self.u.tolist(),
            "u_raw": self.u_raw.tolist(),
            "y": self.y.tolist(),
            "notes": list(self.notes),
        }


def ikie_solve(scenario: Scenario, init: NuvState | None = None) -> SolveReport:
    """Run IKIE on ``scenario`` until the input estimates stop moving."""
    lv = scenario.levels
    K = scenario.horizon
    floor = scenario.variance_floor
    obs = ObsSpec.from_target(scenario.target, scenario.s2)
    free = free_inputs(scenario)
    step = em_step if scenario.method == "em" else am_step
    theta = NuvState.initial(K, lv) if init is None else init
    if len(theta) != K:
        raise ValueError(f"initial NUV state has length {len(theta)}, horizon is {K}")

    trace, residuals, deltas, clips = [], [], [], []
    u_prev = None
    converged = False
    posterior = None
    for i in range(1, scenario.max_iters + 1):
        try:
            posterior, ll = smooth_with_evidence(scenario.model, obs, theta.input_prior(lv))
        except SmootherError as exc:
            exc.iteration = i
            raise
        if scenario.method == "em":
            trace.append(ll + _prior_scale(scenario, theta))
        theta = step(posterior, lv, floor)
        if scenario.method == "am":
            trace.append(joint_map_objective(scenario, posterior.mean, theta))
        clips.append(theta.clipped)
        res = lv.residual(posterior.mean[~free])
        residuals.append(float(res.max()) if res.size else 0.0)
        delta = np.inf if u_prev is None else float(np.max(np.abs(posterior.mean - u_prev)))
        deltas.append(delta)
        u_prev = posterior.mean
        if delta < scenario.tol_convergence:
            converged = True
            break
    iterations = i
    if not converged:
        log.info("%s: no convergence after %d iterations (last max |du| = %.3g)",
                 scenario.name, iterations, deltas[-1])

    u_raw = posterior.mean
    binary_residual = residuals[-1]
    binary = binary_residual <= scenario.tol_binary
    if binary:
        u = np.where(free, lv.a, lv.nearest(u_raw))
    else:
        u = u_raw.copy()
    _, y = simulate(scenario.model, u)
    return SolveReport(
        u=u, u_raw=u_raw, v_u=posterior.var, y=y, cost=cost(scenario.target, y),
        iterations=iterations, converged=converged, binary=bool(binary),
        binary_residual=float(binary_residual), free_inputs=free, theta=theta,
        method=scenario.method, s2=scenario.s2, trace=np.asarray(trace),
        residual_trace=np.asarray(residuals), delta_trace=np.asarray(deltas),
        clip_trace=np.asarray(clips, dtype=int),
    )


def solve_with_s2_sweep(scenario: Scenario, factor=2.0, s2_max=None, max_attempts=8):
    """Retry with ``s2`` multiplied by ``factor`` while the result is nonbinary.

    A pragmatic wrapper around :func:`ikie_solve`.  Returns the last report and
    the list of ``s2`` values tried.
    """
    if factor <= 1:
        raise ValueError("factor must be > 1")
    s2_max = scenario.s2 * factor ** (max_attempts - 1) if s2_max is None else s2_max
    tried = []
    s2 = scenario.s2
    while True:
        report = ikie_solve(scenario.replace(s2=s2))
        tried.append(s2)
        if report.binary or len(tried) >= max_attempts or s2 * factor > s2_max:
            break
        s2 *= factor
    note = f"s2 sweep tried {', '.join(f'{v:g}' for v in tried)}"
    return SolveReport(**{**report.__dict__, "notes": report.notes + (note,)}), tried
