"""scikit-learn style wrapper around :func:`nuvbinary.ikie.ikie_solve`.

The "data" is a target trajectory ``Y`` of shape ``(K, L)`` (or ``(K,)`` for a
single output), and ``sample_weight`` plays the role of the per-step weights
``w_k``.  Fitting computes a binary control for that target.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ikie import ikie_solve
from .model import Levels, LtiModel, Scenario, Target, cost, simulate


class BinaryInputEstimator(TransformerMixin, BaseEstimator):
    """Binary control sequence that makes a linear plant follow a target.

    Parameters mirror :class:`nuvbinary.model.Scenario`.  After ``fit``:

    ``u_``            snapped binary input (or the raw estimate if nonbinary)
    ``u_raw_``        posterior means from the last smoothing pass
    ``report_``       the full :class:`nuvbinary.ikie.SolveReport`
    ``n_iter_``, ``converged_``, ``binary_``, ``binary_residual_``
    """

    def __init__(self, A=None, B=None, C=None, d=None, x0=None, a=0.0, b=1.0, s2=1.0,
                 method="em", max_iters=5000, tol_convergence=None, tol_binary=None,
                 variance_floor=None):
        self.A = A
        self.B = B
        self.C = C
        self.d = d
        self.x0 = x0
        self.a = a
        self.b = b
        self.s2 = s2
        self.method = method
        self.max_iters = max_iters
        self.tol_convergence = tol_convergence
        self.tol_binary = tol_binary
        self.variance_floor = variance_floor

    @classmethod
    def from_scenario(cls, scenario: Scenario):
        m = scenario.model
        return cls(A=m.A, B=m.B, C=m.C, d=m.d, x0=m.x0, a=scenario.levels.a,
                   b=scenario.levels.b, s2=scenario.s2, method=scenario.method,
                   max_iters=scenario.max_iters, tol_convergence=scenario.tol_convergence,
                   tol_binary=scenario.tol_binary, variance_floor=scenario.variance_floor)

    def _model(self):
        if self.A is None or self.B is None or self.C is None:
            raise ValueError("A, B and C must be set")
        return LtiModel(self.A, self.B, self.C, self.d, self.x0)

    def _scenario(self, Y, sample_weight):
        Y = check_array(Y, ensure_2d=False)
        return Scenario(self._model(), Target(Y, sample_weight), Levels(self.a, self.b),
                        s2=self.s2, method=self.method, max_iters=self.max_iters,
                        tol_convergence=self.tol_convergence, tol_binary=self.tol_binary,
                        variance_floor=self.variance_floor, name="estimator")

    def fit(self, Y, y=None, sample_weight=None):
        report = ikie_solve(self._scenario(Y, sample_weight))
        self.report_ = report
        self.u_ = report.u
        self.u_raw_ = report.u_raw
        self.n_iter_ = report.iterations
        self.converged_ = report.converged
        self.binary_ = report.binary
        self.binary_residual_ = report.binary_residual
        return self

    def transform(self, Y, sample_weight=None):
        """Solve for a fresh target and return its control sequence."""
        check_is_fitted(self, "u_")
        return ikie_solve(self._scenario(Y, sample_weight)).u

    def fit_transform(self, Y, y=None, sample_weight=None):
        return self.fit(Y, sample_weight=sample_weight).u_

    def predict(self, Y=None):
        """Plant outputs produced by the fitted control, shape ``(K, L)``."""
        check_is_fitted(self, "u_")
        return simulate(self._model(), self.u_)[1]

    def score(self, Y, y=None, sample_weight=None):
        """Negative tracking cost of the fitted control against ``Y``."""
        check_is_fitted(self, "u_")
        Y = check_array(Y, ensure_2d=False)
        return -cost(Target(Y, sample_weight), self.predict())
