"""State-space plant, tracking target, and scenario containers.

A plant evolves as ``x_k = A x_{k-1} + B u_k + d`` with a known initial state
``x0`` and produces ``y_k = C x_k``.  The tracking cost is the weighted sum of
squared output errors ``sum_k w_k ||y_k - ybreve_k||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numba
import numpy as np

METHODS = ("am", "em")


class ConfigurationError(ValueError):
    """Raised when a model, target, or scenario violates its invariants."""


def _as_matrix(value, name, shape=None):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{name}: not a numeric array ({exc})") from None
    if arr.ndim != 2:
        raise ConfigurationError(f"{name}: expected a 2-D array, got shape {arr.shape}")
    if shape is not None and arr.shape != shape:
        raise ConfigurationError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name}: entries must be finite")
    return arr


def _as_vector(value, name, length=None):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{name}: not a numeric array ({exc})") from None
    arr = arr.reshape(-1) if arr.ndim == 2 and 1 in arr.shape else arr
    if arr.ndim != 1:
        raise ConfigurationError(f"{name}: expected a vector, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ConfigurationError(f"{name}: expected length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name}: entries must be finite")
    return arr


def _freeze(*arrays):
    for arr in arrays:
        arr.setflags(write=False)


@dataclass(frozen=True, eq=False)
class LtiModel:
    """Discrete-time linear plant with scalar input and affine drift."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    d: np.ndarray | None = None
    x0: np.ndarray | None = None

    def __post_init__(self):
        A = _as_matrix(self.A, "model.A")
        n = A.shape[0]
        if n < 1 or A.shape != (n, n):
            raise ConfigurationError(f"model.A: must be square N x N with N >= 1, got {A.shape}")
        B = _as_vector(self.B, "model.B", n)
        C = np.array(self.C, dtype=float)
        if C.ndim == 1:
            C = C.reshape(1, -1)
        C = _as_matrix(C, "model.C")
        if C.shape[1] != n or C.shape[0] < 1:
            raise ConfigurationError(f"model.C: expected shape (L, {n}) with L >= 1, got {C.shape}")
        d = np.zeros(n) if self.d is None else _as_vector(self.d, "model.d", n)
        x0 = np.zeros(n) if self.x0 is None else _as_vector(self.x0, "model.x0", n)
        _freeze(A, B, C, d, x0)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "x0", x0)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    def with_x0(self, x0) -> "LtiModel":
        return replace(self, x0=x0)


@dataclass(frozen=True, eq=False)
class Target:
    """Target output trajectory with nonnegative per-step weights."""

    ybreve: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        y = np.array(self.ybreve, dtype=float)
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        y = _as_matrix(y, "target.ybreve")
        K = y.shape[0]
        if K < 1:
            raise ConfigurationError("target.ybreve: horizon K must be >= 1")
        w = np.ones(K) if self.weights is None else _as_vector(self.weights, "target.weights", K)
        bad = np.flatnonzero(w < 0)
        if bad.size:
            raise ConfigurationError(
                f"target.weights[{bad[0]}]: must be >= 0, got {w[bad[0]]}")
        if not np.any(w > 0):
            raise ConfigurationError("target.weights: at least one weight must be positive")
        _freeze(y, w)
        object.__setattr__(self, "ybreve", y)
        object.__setattr__(self, "weights", w)

    @property
    def horizon(self) -> int:
        return self.ybreve.shape[0]

    def truncate(self, K: int) -> "Target":
        """First ``K`` steps of the target."""
        if not 1 <= K <= self.horizon:
            raise ConfigurationError(f"cannot truncate horizon {self.horizon} to {K}")
        return Target(self.ybreve[:K], self.weights[:K])

    def resize(self, K: int) -> "Target":
        """Tile (or truncate) the target periodically to horizon ``K``."""
        idx = np.arange(K) % self.horizon
        return Target(self.ybreve[idx], self.weights[idx])


@dataclass(frozen=True)
class Levels:
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise ConfigurationError("levels: a and b must be finite")
        if not a < b:
            raise ConfigurationError(f"levels: require a < b, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def gap(self) -> float:
        return self.b - self.a

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    def nearest(self, u):
        """Snap values to the nearer level (ties go to ``a``)."""
        u = np.asarray(u, dtype=float)
        return np.where(u - self.a <= self.b - u, self.a, self.b)

    def residual(self, u):
        """Distance of each value to its nearest level."""
        u = np.asarray(u, dtype=float)
        return np.minimum(np.abs(u - self.a), np.abs(u - self.b))


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything one IKIE solve needs.

    Tolerances left as ``None`` scale with the level gap ``b - a``:
    ``tol_convergence = 1e-7 gap``, ``tol_binary = 1e-3 gap`` and
    ``variance_floor = 1e-12 gap**2``.
    """

    model: LtiModel
    target: Target
    levels: Levels = field(default_factory=Levels)
    s2: float = 1.0
    method: str = "em"
    max_iters: int = 5000
    tol_convergence: float | None = None
    tol_binary: float | None = None
    variance_floor: float | None = None
    name: str = "scenario"

    def __post_init__(self):
        gap = self.levels.gap
        method = str(self.method).lower()
        if method not in METHODS:
            raise ConfigurationError(f"solver.method: must be one of {METHODS}, got {self.method!r}")
        object.__setattr__(self, "method", method)
        s2 = float(self.s2)
        if not (np.isfinite(s2) and s2 > 0):
            raise ConfigurationError(f"solver.s2: must be a positive finite number, got {self.s2}")
        object.__setattr__(self, "s2", s2)
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigurationError(f"solver.max_iters: must be an integer >= 1, got {self.max_iters}")
        object.__setattr__(self, "max_iters", int(self.max_iters))
        defaults = {
            "tol_convergence": 1e-7 * gap,
            "tol_binary": 1e-3 * gap,
            "variance_floor": 1e-12 * gap**2,
        }
        for key, default in defaults.items():
            value = getattr(self, key)
            value = default if value is None else float(value)
            if not (np.isfinite(value) and value > 0):
                raise ConfigurationError(f"solver.{key}: must be > 0, got {value}")
            object.__setattr__(self, key, value)
        if self.model.n_outputs != self.target.ybreve.shape[1]:
            raise ConfigurationError(
                f"target.ybreve: rows must have L={self.model.n_outputs} values, "
                f"got {self.target.ybreve.shape[1]}")

    @property
    def horizon(self) -> int:
        return self.target.horizon

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)


def simulate(model: LtiModel, u):
    """Run the plant forward from ``model.x0``.

    Returns ``(states, outputs)`` with shapes ``(K, N)`` and ``(K, L)``.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if not np.all(np.isfinite(u)):
        raise ConfigurationError("u: entries must be finite")
    states = _simulate(model.A, model.B, model.d, model.x0, u)
    return states, states @ model.C.T


@numba.njit(cache=True)
def _simulate(A, B, d, x0, u):
    K = u.shape[0]
    N = A.shape[0]
    states = np.empty((K, N))
    x = x0.copy()
    nxt = np.empty(N)
    for k in range(K):
        for i in range(N):
            s = d[i] + B[i] * u[k]
            for j in range(N):
                s += A[i, j] * x[j]
            nxt[i] = s
        x[:] = nxt
        states[k] = x
    return states


def cost(target: Target, outputs) -> float:
    """Weighted squared tracking error ``sum_k w_k ||y_k - ybreve_k||^2``."""
    y = np.asarray(outputs, dtype=float)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    if y.shape != target.ybreve.shape:
        raise ConfigurationError(
            f"outputs: shape {y.shape} does not match target shape {target.ybreve.shape}")
    err = np.sum((y - target.ybreve) ** 2, axis=1)
    # zero-weight steps may carry arbitrary (even non-finite-looking) targets
    return float(np.sum(np.where(target.weights > 0, target.weights * err, 0.0)))


def free_response(model: LtiModel, K: int) -> np.ndarray:
    """Outputs for ``u = 0`` (initial state plus drift), shape ``(K, L)``."""
    return simulate(model, np.zeros(K))[1]


def impulse_matrix(model: LtiModel, K: int) -> np.ndarray:
    """Stacked input-to-output map ``G`` with ``y = G u + free_response``.

    Row ``k * L + l`` holds the sensitivity of ``y_k[l]`` to every input.
    """
    N, L = model.n_states, model.n_outputs
    markov = np.empty((K, L))
    v = model.B.copy()
    for i in range(K):
        markov[i] = model.C @ v
        v = model.A @ v
    G = np.zeros((K * L, K))
    for k in range(K):
        for j in range(k + 1):
            G[k * L:(k + 1) * L, j] = markov[k - j]
    return G


def input_influence(model: LtiModel, weights) -> np.ndarray:
    """Weighted output energy caused by a unit change of each input.

    Entry ``k`` is ``sum_{j >= k} w_j ||C A^(j-k) B||^2``; it is zero exactly
    when ``u_k`` cannot affect any weighted output.
    """
    w = np.asarray(weights, dtype=float)
    K = w.shape[0]
    A, B, C = model.A, model.B, model.C
    M = np.zeros((model.n_states, model.n_states))
    CtC = C.T @ C
    out = np.empty(K)
    # unstable plants may overflow to inf, which still reads as "not free"
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(K - 1, -1, -1):
            if w[k] > 0:
                M = M + w[k] * CtC
            out[k] = B @ M @ B
            M = A.T @ M @ A
    return out
