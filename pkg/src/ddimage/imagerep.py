"""Data-driven image representation ``w = M(d/dt) l`` and trajectory prediction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gramian import DataGramian
from .lti import StateSpaceModel, reconstruct_state
from .pencil import PolynomialMatrix, UnimodularEmbedding, regularized_pinv
from .signals import ContinuousSignal, SampledSignal, stack_orders


@dataclass(frozen=True)
class ImageRepresentation:
    M: PolynomialMatrix
    m: int
    p: int
    provenance: dict = field(default_factory=dict)

    @property
    def latent_dim(self) -> int:
        return self.M.shape[1]

    @property
    def degree(self) -> int:
        return self.M.degree


@dataclass(frozen=True)
class Prediction:
    """Predicted trajectory with exact derivative stacks ``col(u, u', ...)`` and ``col(y, y', ...)``."""

    u: SampledSignal
    y: SampledSignal
    u_derivs: SampledSignal
    y_derivs: SampledSignal


def build_image_representation(g: DataGramian, emb: UnimodularEmbedding, lambda_reg: float = 1e-8,
                               max_degree: int | None = None, provenance: dict | None = None) -> ImageRepresentation:
    """Coefficients ``M_j = -[G_u0; G_y0] Z A3reg^+ N^j P [0; I]``.

    ``A3reg^+`` is the Tikhonov-regularized pseudo-inverse of ``A3`` and
    ``N = E3 A3reg^+``. The Neumann series runs over ``j = 0..eta-1``;
    ``max_degree`` truncates it earlier.
    """
    c = emb.E3.shape[0]
    if c != g.size or emb.Z.shape != (c, c):
        raise ValueError("embedding does not match the Gramian dimensions")
    # L > n + 1 adds completion rows whose columns fall in ker Gamma
    if emb.n_completion < g.m + g.p:
        raise ValueError(f"expected at least {g.m + g.p} completion rows, got {emb.n_completion}")
    eta = emb.nilpotency_index
    n_terms = eta if max_degree is None else min(eta, max_degree + 1)
    A3_pinv = regularized_pinv(emb.A3, lambda_reg)
    N = emb.E3 @ A3_pinv
    left = -g.trajectory_rows() @ emb.Z @ A3_pinv
    right = emb.P @ emb.completion_selector()
    coeffs = []
    Nj_right = right
    for _ in range(n_terms):
        coeffs.append(left @ Nj_right)
        Nj_right = N @ Nj_right
    prov = {"L": g.L, "m": g.m, "p": g.p, "lambda_reg": lambda_reg, "nilpotency_index": eta,
            "max_degree": n_terms - 1}
    prov.update(provenance or {})
    return ImageRepresentation(PolynomialMatrix(np.array(coeffs)), g.m, g.p, prov)


def apply_operator(M: PolynomialMatrix, ell: ContinuousSignal, t: np.ndarray, max_order: int = 0) -> np.ndarray:
    """Stack ``col(w, w', ..., w^(max_order))`` for ``w = M(d/dt) ell`` evaluated at ``t``.

    Returns an array of shape (max_order+1, rows(M), len(t)).
    """
    if ell.n_channels != M.shape[1]:
        raise ValueError(f"latent signal has {ell.n_channels} channels, M expects {M.shape[1]}")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ell_derivs = [ell.evaluate(t, j) for j in range(M.degree + max_order + 1)]
    out = np.zeros((max_order + 1, M.shape[0], t.size))
    for k in range(max_order + 1):
        for j in range(M.degree + 1):
            out[k] += M[j] @ ell_derivs[j + k]
    return out


def predict_trajectory(rep: ImageRepresentation, ell: ContinuousSignal, t0: float, dt: float, n_samples: int,
                       max_order: int | None = None) -> Prediction:
    """Evaluate ``w = M(d/dt) ell`` on the grid and split it into input and output.

    ``max_order`` derivatives are returned as well (default ``L``, enough for
    state reconstruction and its time derivative).
    """
    k = rep.provenance.get("L", 1) if max_order is None else max_order
    t = t0 + dt * np.arange(n_samples)
    w = apply_operator(rep.M, ell, t, k)
    m = rep.m
    u_stack = stack_orders([w[j, :m] for j in range(k + 1)])
    y_stack = stack_orders([w[j, m:] for j in range(k + 1)])
    return Prediction(
        u=SampledSignal(t0, dt, w[0, :m]),
        y=SampledSignal(t0, dt, w[0, m:]),
        u_derivs=SampledSignal(t0, dt, u_stack),
        y_derivs=SampledSignal(t0, dt, y_stack),
    )


def behavior_membership_residual(model: StateSpaceModel, u_derivs: SampledSignal, y_derivs: SampledSignal) -> float:
    """``max_t ||x_hat' - A x_hat - B u|| / (1 + ||x_hat||)`` with ``x_hat`` reconstructed from derivatives.

    Needs input orders ``0..n`` and output orders ``0..n`` (one more than the
    reconstruction itself, for ``x_hat'``).
    """
    n, m, p = model.n, model.m, model.p
    if u_derivs.n_channels < (n if np.all(model.D == 0) else n + 1) * m or y_derivs.n_channels < (n + 1) * p:
        raise ValueError("need derivative orders up to n for the residual")
    x_hat = reconstruct_state(model, u_derivs, y_derivs)
    dx_hat = reconstruct_state(model, u_derivs.channels(slice(m, None)), y_derivs.channels(slice(p, None)))
    res = dx_hat.values - model.A @ x_hat.values - model.B @ u_derivs.values[:m]
    num = np.linalg.norm(res, axis=0)
    den = 1.0 + np.linalg.norm(x_hat.values, axis=0)
    return float(np.max(num / den))
