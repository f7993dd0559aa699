"""Staircase reduction of matrix pencils, unimodular embedding and polynomial inverse.

All transformations are orthogonal except the final (triangular) inversion,
which can be replaced by a Tikhonov-regularized pseudo-inverse.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg


class RankDecisionWarning(UserWarning):
    """A rank decision in the staircase reduction had singular values close to the threshold."""

    def __init__(self, message: str, gap_ratio: float):
        super().__init__(message)
        self.gap_ratio = gap_ratio


@dataclass(frozen=True)
class PolynomialMatrix:
    """``M(s) = sum_k coeffs[k] s^k`` with coefficients stacked along axis 0."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[0] < 1:
            raise ValueError("coefficients must have shape (degree+1, rows, cols)")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def shape(self):
        return self.coeffs.shape[1:]

    def __call__(self, s):
        out = np.zeros(self.shape, dtype=np.result_type(s, float))
        for ck in self.coeffs[::-1]:
            out = out * s + ck
        return out

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return self.coeffs.shape[0]

    def padded(self, degree: int) -> "PolynomialMatrix":
        if degree < self.degree:
            raise ValueError("cannot pad to a lower degree")
        extra = np.zeros((degree - self.degree,) + self.shape)
        return PolynomialMatrix(np.concatenate([self.coeffs, extra]))


def regularized_pinv(A: np.ndarray, lambda_reg: float = 0.0) -> np.ndarray:
    """Tikhonov-regularized pseudo-inverse ``V diag(s / (s^2 + lambda)) U^T``."""
    if lambda_reg < 0:
        raise ValueError("lambda_reg must be non-negative")
    U, s, Vt = np.linalg.svd(np.atleast_2d(A), full_matrices=False)
    denom = s**2 + lambda_reg
    s_reg = np.divide(s, denom, out=np.zeros_like(s), where=denom > 0)
    return (Vt.T * s_reg) @ U.T


def realify(M: np.ndarray) -> np.ndarray:
    """Real ``2r x 2c`` image ``[[Re, -Im], [Im, Re]]`` of a complex matrix; rank doubles."""
    M = np.asarray(M, dtype=complex)
    return np.block([[M.real, -M.imag], [M.imag, M.real]])


def pencil_row_rank_everywhere(E: np.ndarray, A: np.ndarray, n_points: int = 20, seed: int = 0, rtol: float = 1e-10) -> bool:
    """Randomized check that ``sE - A`` has full row rank at ``n_points`` complex samples of ``s``."""
    rng = np.random.default_rng(seed)
    r = E.shape[0]
    scale = max(np.linalg.norm(E, 2), np.linalg.norm(A, 2), np.finfo(float).tiny)
    for _ in range(n_points):
        s = complex(rng.normal(), rng.normal())
        sv = np.linalg.svd(realify(s * E - A), compute_uv=False)
        if np.sum(sv > rtol * scale * max(1.0, abs(s))) < 2 * r:
            return False
    return True


@dataclass
class StaircaseDecomposition:
    """``Q^T (s E0 - A0) Z = s E1 - A1`` in block upper-triangular staircase form.

    Block ``i`` spans ``block_rows[i]`` rows and ``block_cols[i]`` columns. The
    E-part vanishes on and below the block diagonal, diagonal blocks ``A_ii``
    are upper-triangular with full row rank. A trailing block may have zero
    rows. ``complete`` is False when the reduction stalled (the pencil loses
    row rank somewhere in the complex plane); the unreduced rows and columns
    are then the trailing part of ``E1``, ``A1``.
    """

    Q: np.ndarray
    Z: np.ndarray
    E1: np.ndarray
    A1: np.ndarray
    block_rows: list
    block_cols: list
    complete: bool
    threshold: float
    gap_ratios: list = field(default_factory=list)

    @property
    def n_blocks(self) -> int:
        return len(self.block_rows)

    def row_slice(self, i: int) -> slice:
        start = int(sum(self.block_rows[:i]))
        return slice(start, start + self.block_rows[i])

    def col_slice(self, i: int) -> slice:
        start = int(sum(self.block_cols[:i]))
        return slice(start, start + self.block_cols[i])

    def A_block(self, i: int, j: int) -> np.ndarray:
        return self.A1[self.row_slice(i), self.col_slice(j)]

    def E_block(self, i: int, j: int) -> np.ndarray:
        return self.E1[self.row_slice(i), self.col_slice(j)]


def _rank(s: np.ndarray, thr: float, where: str, gaps: list) -> int:
    rank = int(np.sum(s > thr))
    if s.size:
        hi = s[rank - 1] if rank > 0 else np.inf
        lo = s[rank] if rank < s.size else 0.0
        gap = float(hi / lo) if lo > 0 else np.inf
        gaps.append(gap)
        # ambiguous: singular values close to the threshold without a clear gap
        near = (s > thr / 10) & (s < thr * 10)
        if np.any(near) and gap < 1e3:
            warnings.warn(RankDecisionWarning(
                f"ambiguous rank decision in {where}: gap ratio {gap:.3g} at threshold {thr:.3g}", gap), stacklevel=3)
    return rank


def staircase_reduce(E0: np.ndarray, A0: np.ndarray, tol: float | None = None) -> StaircaseDecomposition:
    """Reduce ``sE0 - A0`` (r x c, r <= c) to staircase form by orthogonal transformations.

    Each stair compresses the columns of the remaining E-block (its right
    null space moves to the front), then compresses the rows of the exposed
    A-columns. A final pass rotates every diagonal block into ``[R 0]`` with
    ``R`` upper-triangular and invertible.

    Parameters
    ----------
    E0, A0
        Pencil matrices of equal shape.
    tol
        Relative rank tolerance; singular values below ``tol * max(||E0||, ||A0||)``
        count as zero. Defaults to ``max(r, c) * eps``.
    """
    E = np.array(E0, dtype=float)
    A = np.array(A0, dtype=float)
    if E.shape != A.shape:
        raise ValueError("E0 and A0 must have the same shape")
    r, c = E.shape
    if r > c:
        raise ValueError("staircase reduction needs at most as many rows as columns")
    if tol is None:
        tol = max(r, c) * np.finfo(float).eps
    scale = max(np.linalg.norm(E, 2) if E.size else 0.0, np.linalg.norm(A, 2) if A.size else 0.0)
    thr = tol * (scale if scale > 0 else 1.0)
    Q = np.eye(r)
    Z = np.eye(c)
    rows, cols, gaps = [], [], []
    row0 = col0 = 0
    complete = True
    while row0 < r:
        # column compression: null space of the remaining E-block goes first
        _, s, Vt = np.linalg.svd(E[row0:, col0:], full_matrices=True)
        rank_e = _rank(s, thr, "column compression", gaps)
        V = Vt.T
        Zi = np.hstack([V[:, rank_e:], V[:, :rank_e]])
        E[:, col0:] = E[:, col0:] @ Zi
        A[:, col0:] = A[:, col0:] @ Zi
        Z[:, col0:] = Z[:, col0:] @ Zi
        ci = (c - col0) - rank_e
        E[row0:, col0:col0 + ci] = 0.0
        if ci == 0:
            complete = False
            break
        # row compression of the exposed A-columns
        U, s, _ = np.linalg.svd(A[row0:, col0:col0 + ci], full_matrices=True)
        ri = _rank(s, thr, "row compression", gaps)
        if ri == 0:
            complete = False
            break
        A[row0:, :] = U.T @ A[row0:, :]
        E[row0:, :] = U.T @ E[row0:, :]
        Q[:, row0:] = Q[:, row0:] @ U
        A[row0 + ri:, col0:col0 + ci] = 0.0
        E[row0:, col0:col0 + ci] = 0.0
        rows.append(ri)
        cols.append(ci)
        row0 += ri
        col0 += ci
    if complete and col0 < c:
        rows.append(0)
        cols.append(c - col0)
    sc = StaircaseDecomposition(Q, Z, E, A, rows, cols, complete, thr, gaps)
    _triangularize_diagonal(sc)
    return sc


def _triangularize_diagonal(sc: StaircaseDecomposition) -> None:
    """Rotate each ``A_ii`` into ``[R 0]`` with ``R`` upper-triangular (in place)."""
    for i in range(sc.n_blocks):
        ri, ci = sc.block_rows[i], sc.block_cols[i]
        if ri == 0:
            continue
        rs, cs = sc.row_slice(i), sc.col_slice(i)
        Qt, _ = linalg.qr(sc.A1[rs, cs].T)
        # A_ii Qt is [L 0] with L lower-triangular; reversing rows and the
        # first ri columns turns L into an upper-triangular block
        W = Qt.copy()
        W[:, :ri] = W[:, :ri][:, ::-1]
        rev = np.arange(rs.start, rs.stop)[::-1]
        for M in (sc.E1, sc.A1):
            M[:, cs] = M[:, cs] @ W
        sc.Z[:, cs] = sc.Z[:, cs] @ W
        sc.E1[rs] = sc.E1[rev]
        sc.A1[rs] = sc.A1[rev]
        sc.Q[:, rs] = sc.Q[:, rev]
        blk = sc.A1[rs, cs]
        blk[:, ri:] = 0.0
        blk[np.tril_indices(ri, -1)] = 0.0
        sc.A1[rs, cs] = blk


@dataclass(frozen=True)
class UnimodularEmbedding:
    """Square pencil ``sE3 - A3 = P [sE1 - A1; K_tilde]`` with ``A3`` upper-triangular, ``E3 A3^-1`` nilpotent."""

    E3: np.ndarray
    A3: np.ndarray
    P: np.ndarray
    K_tilde: np.ndarray
    Q: np.ndarray
    Z: np.ndarray
    nilpotency_index: int
    n_rows: int

    @property
    def n_completion(self) -> int:
        return self.E3.shape[0] - self.n_rows

    def completion_selector(self) -> np.ndarray:
        """``[0; I]``: the completion rows in the ordering before ``P``."""
        c = self.E3.shape[0]
        S = np.zeros((c, self.n_completion))
        S[self.n_rows:] = np.eye(self.n_completion)
        return S

    def pencil(self, s):
        return s * self.E3 - self.A3

    def G(self, s, E0: np.ndarray, A0: np.ndarray) -> np.ndarray:
        """Embedded polynomial matrix ``[sE0 - A0; K_tilde Z^T]``."""
        return np.vstack([s * E0 - A0, self.K_tilde @ self.Z.T])

    def G_from_staircase(self, s) -> np.ndarray:
        """``blockdiag(Q, I) P^T (sE3 - A3) Z^T``."""
        c = self.E3.shape[0]
        Qb = np.eye(c)
        Qb[:self.n_rows, :self.n_rows] = self.Q
        return Qb @ self.P.T @ self.pencil(s) @ self.Z.T


def nilpotency_index(N: np.ndarray, rtol: float = 1e-8) -> int:
    """Smallest ``eta`` with ``||N^eta|| <= rtol * max(1, ||N||, ..., ||N^(eta-1)||)``."""
    size = N.shape[0]
    Pk = np.eye(size)
    scale = 1.0
    for k in range(1, size + 1):
        Pk = Pk @ N
        nrm = np.linalg.norm(Pk)
        if nrm <= rtol * scale:
            return k
        scale = max(scale, nrm)
    raise ValueError("matrix is not nilpotent")


def embed_unimodular(sc: StaircaseDecomposition) -> UnimodularEmbedding:
    """Complete every ``A_ii`` to an invertible upper-triangular block and interleave the completions."""
    if not sc.complete:
        raise ValueError("staircase reduction is incomplete: the pencil loses row rank for some s")
    r, c = sc.E1.shape
    K = np.zeros((c - r, c))
    order = []
    krow = 0
    for i in range(sc.n_blocks):
        ri, ci = sc.block_rows[i], sc.block_cols[i]
        rs, cs = sc.row_slice(i), sc.col_slice(i)
        if ri > 0:
            diag = np.abs(np.diag(sc.A1[rs, cs][:, :ri]))
            if np.any(diag <= sc.threshold):
                raise ValueError(f"diagonal block {i} is row-rank deficient")
        # K_i: trailing rows of the ci x ci identity
        K[krow:krow + ci - ri, cs.start + ri:cs.stop] = np.eye(ci - ri)
        order.extend(range(rs.start, rs.stop))
        order.extend(range(r + krow, r + krow + ci - ri))
        krow += ci - ri
    P = np.eye(c)[order]
    E2 = np.vstack([sc.E1, np.zeros((c - r, c))])
    A2 = np.vstack([sc.A1, K])
    E3 = P @ E2
    A3 = P @ A2
    A3_inv = linalg.solve_triangular(A3, np.eye(c))
    eta = nilpotency_index(E3 @ A3_inv)
    return UnimodularEmbedding(E3, A3, P, -K, sc.Q, sc.Z, eta, r)


def pencil_inverse(emb: UnimodularEmbedding, max_degree: int | None = None, lambda_reg: float | None = None) -> PolynomialMatrix:
    """``(sE3 - A3)^-1 = -A3^-1 sum_{j<eta} s^j N^j`` with ``N = E3 A3^-1``.

    ``A3^-1`` comes from back-substitution, or from :func:`regularized_pinv`
    when ``lambda_reg`` is given.
    """
    eta = emb.nilpotency_index
    if max_degree is not None and max_degree < eta - 1:
        raise ValueError(f"max_degree must be at least {eta - 1}")
    c = emb.A3.shape[0]
    if lambda_reg is None:
        d = np.abs(np.diag(emb.A3))
        if np.any(d <= np.finfo(float).eps * max(d.max(initial=0.0), 1.0) * c):
            raise ValueError("A3 is numerically singular; pass lambda_reg")
        A3_inv = linalg.solve_triangular(emb.A3, np.eye(c))
    else:
        A3_inv = regularized_pinv(emb.A3, lambda_reg)
    N = emb.E3 @ A3_inv
    coeffs = []
    Nj = np.eye(c)
    for _ in range(eta):
        coeffs.append(-A3_inv @ Nj)
        Nj = Nj @ N
    poly = PolynomialMatrix(np.array(coeffs))
    return poly if max_degree is None else poly.padded(max_degree)
