"""Random interpolating-spline inputs and numerical persistency-of-excitation checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import make_interp_spline

from .signals import SampledSignal, SplineSignal

#: Default threshold on the smallest singular value of the energy-normalized Gramian.
TOL_PE = 1e-8


@dataclass(frozen=True)
class SplineInputSpec:
    m: int = 1
    degree: int = 7
    knots: int = 14
    t_min: float = 0.0
    t_max: float = 3 * np.pi
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.degree < 1:
            raise ValueError("spline degree must be >= 1")
        if self.degree >= self.knots:
            raise ValueError(f"spline degree ({self.degree}) must be smaller than the knot count ({self.knots})")
        if not self.t_min < self.t_max:
            raise ValueError("t_min must be smaller than t_max")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")

    @property
    def knot_times(self) -> np.ndarray:
        j = np.arange(self.knots)
        return self.t_min + j / (self.knots - 1) * (self.t_max - self.t_min)


def draw_knot_values(spec: SplineInputSpec) -> np.ndarray:
    """Uniform knot values, shape (m, knots).

    Channel ``i`` draws from its own PCG64 stream, spawned from
    ``SeedSequence(spec.seed)``, so adding channels leaves existing ones unchanged.
    """
    streams = np.random.SeedSequence(spec.seed).spawn(spec.m)
    rows = [np.random.default_rng(s).uniform(-spec.amplitude, spec.amplitude, spec.knots) for s in streams]
    return np.vstack(rows)


def interpolating_spline(t_knots, values, degree: int) -> SplineSignal:
    """Degree-``degree`` spline through ``(t_knots[j], values[:, j])`` with not-a-knot closure."""
    values = np.atleast_2d(values)
    spl = make_interp_spline(t_knots, values.T, k=degree)
    return SplineSignal(spl)


def generate_pe_spline(spec: SplineInputSpec, values=None) -> SplineSignal:
    """Random spline input ``col(S_1, ..., S_m)`` interpolating uniform random knot values.

    ``values`` overrides the random draw (shape (m, knots)).
    """
    Y = draw_knot_values(spec) if values is None else np.atleast_2d(np.asarray(values, dtype=float))
    if Y.shape != (spec.m, spec.knots):
        raise ValueError(f"knot values must have shape {(spec.m, spec.knots)}")
    return interpolating_spline(spec.knot_times, Y, spec.degree)


def trapezoid_gramian(V: np.ndarray, dt: float) -> np.ndarray:
    """``int V V^T`` by the trapezoidal rule on a uniform grid."""
    w = np.full(V.shape[1], dt)
    if V.shape[1] > 1:
        w[0] = w[-1] = 0.5 * dt
    return (V * w) @ V.T


def pe_order(stack: SampledSignal, k: int, m: int = 1, tol: float = TOL_PE):
    """Check persistency of excitation of order ``k``.

    Parameters
    ----------
    stack
        ``col(u, u', ..., u^(j))`` with ``j >= k-1`` and ``m`` channels per block.
    k
        Order to test.

    Returns
    -------
    min_singular_value : float
        Smallest singular value of the energy-normalized Gramian of
        ``col(u, ..., u^(k-1))``.
    is_pe : bool
        ``min_singular_value > tol``.
    """
    if k < 1:
        raise ValueError("order k must be >= 1")
    if stack.n_samples < 2:
        raise ValueError("empty interval")
    if stack.n_channels < k * m:
        raise ValueError(f"stack holds {stack.n_channels // m} orders, need {k}")
    G = trapezoid_gramian(stack.values[:k * m], stack.dt)
    energy = np.diag(G).copy()
    if np.any(energy <= 0):
        return 0.0, False
    scale = 1.0 / np.sqrt(energy)
    Gn = G * np.outer(scale, scale)
    smin = float(np.linalg.svd(Gn, compute_uv=False)[-1])
    return smin, smin > tol
