"""Measurement noise, signal-to-noise ratio and the state-scaled relative error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import SampledSignal


@dataclass(frozen=True)
class NoiseSpec:
    std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.std >= 0:
            raise ValueError("noise standard deviation must be non-negative")


def add_noise(y: SampledSignal, spec: NoiseSpec) -> tuple[SampledSignal, SampledSignal]:
    """Add i.i.d. zero-mean Gaussian noise to every sample.

    Returns ``(noisy, noise)``; the noise is a pure function of ``spec``.
    """
    if spec.std == 0:
        noise = np.zeros_like(y.values)
    else:
        noise = np.random.default_rng(spec.seed).normal(0.0, spec.std, size=y.values.shape)
    return SampledSignal(y.t0, y.dt, y.values + noise), SampledSignal(y.t0, y.dt, noise)


def snr_db(y, noise) -> float:
    """``10 log10(sum y^2 / sum noise^2)``; ``inf`` for zero noise energy."""
    y = np.asarray(getattr(y, "values", y), dtype=float)
    noise = np.asarray(getattr(noise, "values", noise), dtype=float)
    if y.shape != noise.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {noise.shape}")
    e_noise = float(np.sum(noise ** 2))
    if e_noise == 0.0:
        return np.inf
    e_sig = float(np.sum(y ** 2))
    if e_sig == 0.0:
        return -np.inf
    return 10.0 * np.log10(e_sig / e_noise)


def relative_error(x_ref, x_hat) -> float:
    """``||S^-1 (X_hat - X)||_F / ||S^-1 X||_F`` with ``S`` the per-state sample std of the reference.

    Rows are states, columns are samples; the std uses ``ddof=1``.
    """
    X = np.atleast_2d(np.asarray(getattr(x_ref, "values", x_ref), dtype=float))
    Xh = np.atleast_2d(np.asarray(getattr(x_hat, "values", x_hat), dtype=float))
    if X.shape != Xh.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Xh.shape}")
    if X.shape[1] < 2:
        raise ValueError("need at least two samples for a sample standard deviation")
    S = X.std(axis=1, ddof=1)
    if np.any(S == 0):
        raise ValueError("degenerate reference: a state has zero sample standard deviation")
    num = np.linalg.norm((Xh - X) / S[:, None])
    den = np.linalg.norm(X / S[:, None])
    return float(num / den)
