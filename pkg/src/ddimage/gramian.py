"""Derivative stacks, data Gramians and the data-defined matrix pencil."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .excitation import trapezoid_gramian
from .signals import SampledSignal


@dataclass(frozen=True)
class DerivativeStack:
    """``W = col(u, ..., u^(L-1), y, ..., y^(L-1))`` on a uniform grid."""

    L: int
    m: int
    p: int
    t0: float
    dt: float
    W: np.ndarray


@dataclass(frozen=True)
class DataGramian:
    Gamma: np.ndarray
    L: int
    m: int
    p: int

    def __post_init__(self):
        size = self.L * (self.m + self.p)
        if self.Gamma.shape != (size, size):
            raise ValueError(f"Gamma must be {size}x{size}, got {self.Gamma.shape}")

    @property
    def size(self) -> int:
        return self.L * (self.m + self.p)

    def u_block(self, k: int) -> np.ndarray:
        return self.Gamma[k * self.m:(k + 1) * self.m]

    def y_block(self, k: int) -> np.ndarray:
        off = self.L * self.m
        return self.Gamma[off + k * self.p:off + (k + 1) * self.p]

    def trajectory_rows(self) -> np.ndarray:
        """``[Gamma_u^(0); Gamma_y^(0)]``: the rows that map the trajectory parameter to ``(u, y)``."""
        return np.vstack([self.u_block(0), self.y_block(0)])

    def scaled(self, c: float) -> "DataGramian":
        return DataGramian(c * self.Gamma, self.L, self.m, self.p)


@dataclass(frozen=True)
class DataPencil:
    E0: np.ndarray
    A0: np.ndarray

    def __call__(self, s):
        return s * self.E0 - self.A0


def build_stack(u_derivs: SampledSignal, y_derivs: SampledSignal, L: int, m: int, p: int) -> DerivativeStack:
    """Order the first ``L`` derivative blocks of ``u`` and ``y`` into ``W``."""
    if not u_derivs.same_grid(y_derivs):
        raise ValueError("input and output derivative stacks are on different grids")
    if u_derivs.n_channels < L * m or y_derivs.n_channels < L * p:
        raise ValueError(f"stacks must hold derivative orders 0..{L - 1}")
    W = np.vstack([u_derivs.values[:L * m], y_derivs.values[:L * p]])
    return DerivativeStack(L, m, p, u_derivs.t0, u_derivs.dt, W)


def build_gramian(stack: DerivativeStack) -> DataGramian:
    """Trapezoidal quadrature of ``int W W^T``."""
    if stack.W.shape[1] < 2:
        raise ValueError("need at least two samples")
    G = trapezoid_gramian(stack.W, stack.dt)
    G = 0.5 * (G + G.T)
    return DataGramian(G, stack.L, stack.m, stack.p)


def truncate_rank(g: DataGramian, rank: int) -> DataGramian:
    """Best rank-``rank`` approximation of the symmetric positive semi-definite ``Gamma``.

    Noise makes the Gramian of filtered data full rank; projecting onto the
    dominant eigenspace restores the kernel that carries the system dynamics.
    """
    if not 0 < rank <= g.size:
        raise ValueError(f"rank must lie in 1..{g.size}")
    if rank == g.size:
        return g
    w, V = np.linalg.eigh(g.Gamma)
    keep = np.argsort(w)[::-1][:rank]
    Vk = V[:, keep]
    G = (Vk * w[keep]) @ Vk.T
    return DataGramian(0.5 * (G + G.T), g.L, g.m, g.p)


def decompose_blocks(g: DataGramian):
    """Row blocks ``[(Gamma_u^(k), Gamma_y^(k)) for k in 0..L-1]``."""
    return [(g.u_block(k), g.y_block(k)) for k in range(g.L)]


def selector_matrices(L: int, m: int, p: int):
    """Selectors with ``E0 = J1 Gamma`` (orders 0..L-2) and ``A0 = J2 Gamma`` (orders 1..L-1)."""
    rows = (L - 1) * (m + p)
    cols = L * (m + p)
    J1 = np.zeros((rows, cols))
    J2 = np.zeros((rows, cols))
    nu = (L - 1) * m
    J1[:nu, :nu] = np.eye(nu)
    J2[:nu, m:L * m] = np.eye(nu)
    ny = (L - 1) * p
    J1[nu:, L * m:L * m + ny] = np.eye(ny)
    J2[nu:, L * m + p:] = np.eye(ny)
    return J1, J2


def build_pencil(g: DataGramian) -> DataPencil:
    """``E0`` stacks the blocks of orders ``0..L-2`` (inputs, then outputs), ``A0`` those of orders ``1..L-1``."""
    if g.L < 2:
        raise ValueError("the pencil needs L >= 2")
    L = g.L
    E0 = np.vstack([g.u_block(k) for k in range(L - 1)] + [g.y_block(k) for k in range(L - 1)])
    A0 = np.vstack([g.u_block(k) for k in range(1, L)] + [g.y_block(k) for k in range(1, L)])
    J1, J2 = selector_matrices(L, g.m, g.p)
    # 0/1 selectors reproduce the slices bit for bit
    if not (np.array_equal(J1 @ g.Gamma, E0) and np.array_equal(J2 @ g.Gamma, A0)):
        raise AssertionError("pencil does not factor as (s J1 - J2) Gamma")
    return DataPencil(E0, A0)


def compress_rows(pen: DataPencil, tol: float = 1e-8) -> DataPencil:
    """Drop the constant left kernel shared by ``E0`` and ``A0``.

    For ``L > n + 1`` the differential equation itself annihilates both
    coefficient matrices, so ``s E0 - A0`` loses row rank at every ``s``.
    Projecting onto the row space of ``[E0 A0]`` removes those relations
    without changing the column behavior.
    """
    rank, _, _ = numerical_rank(np.hstack([pen.E0, pen.A0]), tol)
    if rank == pen.E0.shape[0]:
        return pen
    U = np.linalg.svd(np.hstack([pen.E0, pen.A0]))[0][:, :rank]
    return DataPencil(U.T @ pen.E0, U.T @ pen.A0)


def numerical_rank(M: np.ndarray, tol: float = 1e-8, min_gap: float = 1e6):
    """Numerical rank via the largest singular-value gap, falling back to a relative threshold.

    Returns ``(rank, gap_ratio, singular_values)``. The gap rule is used when
    the largest ratio ``s_i / s_{i+1}`` exceeds ``min_gap``; otherwise the rank
    counts singular values above ``tol * s_max``.
    """
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0, np.inf, s
    with np.errstate(divide="ignore"):
        ratios = s[:-1] / s[1:]
    if ratios.size and np.max(ratios) > min_gap:
        r = int(np.argmax(ratios)) + 1
        return r, float(ratios[r - 1]), s
    r = int(np.sum(s > tol * s[0]))
    gap = float(s[r - 1] / s[r]) if 0 < r < s.size else np.inf
    return r, gap, s
