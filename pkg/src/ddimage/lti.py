"""Continuous-time LTI models: simulation, observability, state reconstruction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .signals import SampledSignal


@dataclass(frozen=True)
class StateSpaceModel:
    """``x' = A x + B u``, ``y = C x + D u``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        D = np.asarray(self.D, dtype=float)
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if C.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got {C.shape}")
        m, p = B.shape[1], C.shape[0]
        D = np.zeros((p, m)) if D.size == 0 else D.reshape(p, m)
        for name, val in zip("ABCD", (A, B, C, D)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


def example_system() -> StateSpaceModel:
    """Third-order single-input single-output benchmark: unit oscillator driven through a first-order lag."""
    A = [[0.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, 0.0, -2.0]]
    return StateSpaceModel(A, [[0.0], [0.0], [1.0]], [[1.0, 0.0, 1.0]], [[0.0]])


def _rk4_interval_maps(model: StateSpaceModel, dt: float, substeps: int):
    """Exact linear maps of ``substeps`` RK4 steps over one sample interval.

    The input is interpolated linearly between the two sample values, so one
    interval is ``x+ = Phi x + G0 u_k + G1 u_{k+1}``. The maps are obtained
    by running the RK4 recursion on the augmented state ``(x, u_k, u_{k+1})``.
    """
    n, m = model.n, model.m
    h = dt / substeps
    A, B = model.A, model.B
    # columns of the augmented identity propagate through the (linear) scheme
    X = np.hstack([np.eye(n), np.zeros((n, 2 * m))])
    U0 = np.hstack([np.zeros((m, n)), np.eye(m), np.zeros((m, m))])
    U1 = np.hstack([np.zeros((m, n + m)), np.eye(m)])

    def u_at(theta):
        return (1.0 - theta) * U0 + theta * U1

    for j in range(substeps):
        th = j / substeps
        k1 = A @ X + B @ u_at(th)
        k2 = A @ (X + 0.5 * h * k1) + B @ u_at(th + 0.5 / substeps)
        k3 = A @ (X + 0.5 * h * k2) + B @ u_at(th + 0.5 / substeps)
        k4 = A @ (X + h * k3) + B @ u_at(th + 1.0 / substeps)
        X = X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return X[:, :n], X[:, n:n + m], X[:, n + m:]


def simulate(model: StateSpaceModel, u: SampledSignal, x0=None, substeps: int = 10):
    """Simulate on the grid of ``u`` with fixed-step RK4.

    Parameters
    ----------
    model
        System to integrate.
    u
        Input samples, ``m`` channels. Linearly interpolated between samples.
    x0
        Initial state at ``u.t0`` (zero by default).
    substeps
        RK4 steps per sample interval.

    Returns
    -------
    x, y : SampledSignal
        State and output on the grid of ``u``.
    """
    if u.n_channels != model.m:
        raise ValueError(f"input has {u.n_channels} channels, model expects {model.m}")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    n = model.n
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    uv = u.values
    N = u.n_samples
    X = np.empty((n, N))
    X[:, 0] = x0
    if N > 1:
        Phi, G0, G1 = _rk4_interval_maps(model, u.dt, substeps)
        forcing = G0 @ uv[:, :-1] + G1 @ uv[:, 1:]
        x = x0
        for k in range(N - 1):
            x = Phi @ x + forcing[:, k]
            X[:, k + 1] = x
    Y = model.C @ X + model.D @ uv
    return SampledSignal(u.t0, u.dt, X), SampledSignal(u.t0, u.dt, Y)


def observability_matrix(model: StateSpaceModel, k: int) -> np.ndarray:
    """``col(C, CA, ..., CA^(k-1))``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    blocks = [model.C]
    for _ in range(k - 1):
        blocks.append(blocks[-1] @ model.A)
    return np.vstack(blocks)


def lag(model: StateSpaceModel) -> int:
    """Observability index: smallest k with rank O_k = n."""
    for k in range(1, model.n + 1):
        if np.linalg.matrix_rank(observability_matrix(model, k)) == model.n:
            return k
    raise ValueError("model is unobservable")


def markov_toeplitz(model: StateSpaceModel, k: int, n_inputs_orders: int | None = None) -> np.ndarray:
    """Lower block-triangular Toeplitz matrix mapping ``col(u, ..., u^(j))`` into ``col(y, ..., y^(k-1))``.

    Block (i, j) is ``D`` for i == j and ``C A^(i-j-1) B`` for i > j.
    """
    q = k if n_inputs_orders is None else n_inputs_orders
    p, m = model.p, model.m
    T = np.zeros((k * p, q * m))
    markov = [model.D]
    Ak = np.eye(model.n)
    for _ in range(k):
        markov.append(model.C @ Ak @ model.B)
        Ak = Ak @ model.A
    for i in range(k):
        for j in range(min(i + 1, q)):
            T[i * p:(i + 1) * p, j * m:(j + 1) * m] = markov[i - j]
    return T


def output_derivatives(model: StateSpaceModel, x: np.ndarray, u_stack: np.ndarray, max_order: int) -> np.ndarray:
    """Exact ``col(y, ..., y^(max_order))`` from states and input derivatives ``col(u, ..., u^(max_order))``."""
    k = max_order + 1
    O = observability_matrix(model, k)
    T = markov_toeplitz(model, k)
    return O @ x + T @ u_stack[:k * model.m]


def reconstruct_state(model: StateSpaceModel, u_derivs: SampledSignal, y_derivs: SampledSignal) -> SampledSignal:
    """Per-sample state from ``col(y, ..., y^(n-1))`` and input derivatives via the observability matrix.

    ``u_derivs`` needs orders ``0..n-1``; orders ``0..n-2`` suffice when ``D = 0``.
    """
    n, m, p = model.n, model.m, model.p
    if not u_derivs.same_grid(y_derivs):
        raise ValueError("derivative stacks are on different grids")
    if y_derivs.n_channels < n * p:
        raise ValueError(f"need output derivatives of orders 0..{n - 1}")
    q = min(u_derivs.n_channels // m, n)
    if q < n - 1 or (q < n and np.any(model.D != 0)):
        raise ValueError("not enough input derivative orders")
    O = observability_matrix(model, n)
    if np.linalg.matrix_rank(O) < n:
        raise ValueError("observability matrix is singular (unobservable model)")
    T = markov_toeplitz(model, n, q)
    rhs = y_derivs.values[:n * p] - T @ u_derivs.values[:q * m]
    if O.shape[0] == n:
        X = linalg.solve(O, rhs)
    else:
        X = np.linalg.lstsq(O, rhs, rcond=None)[0]
    return SampledSignal(y_derivs.t0, y_derivs.dt, X)
