"""Signal containers: uniformly sampled data and continuous signals with exact derivatives."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class SampledSignal:
    """Multichannel signal on the uniform grid ``t0 + i*dt``.

    ``values`` has shape (channels, samples). Derivative stacks use the same
    container with channels ordered ``col(f, f', ..., f^(k))``.
    """

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.ndim != 2:
            raise ValueError("values must be (channels, samples)")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if values.shape[1] < 1:
            raise ValueError("signal needs at least one sample")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n_samples - 1)

    def same_grid(self, other: "SampledSignal", rtol: float = 1e-9) -> bool:
        return (
            self.n_samples == other.n_samples
            and abs(self.dt - other.dt) <= rtol * self.dt
            and abs(self.t0 - other.t0) <= rtol * max(self.dt, abs(self.t0))
        )

    def channels(self, rows) -> "SampledSignal":
        return SampledSignal(self.t0, self.dt, self.values[rows])

    def order_block(self, order: int, width: int) -> np.ndarray:
        """Rows of derivative ``order`` in a stack whose blocks have ``width`` channels."""
        return self.values[order * width:(order + 1) * width]

    def slice(self, start: int, stop: int | None = None) -> "SampledSignal":
        return SampledSignal(self.t0 + start * self.dt, self.dt, self.values[:, start:stop])


def uniform_grid(t_start: float, t_stop: float, dt: float) -> np.ndarray:
    """Grid ``t_start + i*dt`` covering ``[t_start, t_stop]`` (end point included when it lands on the grid)."""
    n = int(np.floor((t_stop - t_start) / dt + 1e-9)) + 1
    return t_start + dt * np.arange(n)


def stack_orders(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Vertically stack per-order arrays into ``col(f, f', ...)`` ordering."""
    return np.vstack([np.atleast_2d(b) for b in blocks])


class ContinuousSignal:
    """A signal that can be evaluated, together with its derivatives, at any time."""

    n_channels: int

    def evaluate(self, t, order: int = 0) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t, order: int = 0) -> np.ndarray:
        return self.evaluate(t, order)

    def derivative_stack(self, t, max_order: int) -> np.ndarray:
        """``col(f, f', ..., f^(max_order))`` evaluated at ``t``, shape ((max_order+1)*channels, len(t))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return stack_orders([self.evaluate(t, k) for k in range(max_order + 1)])

    def sample(self, t0: float, dt: float, n: int, order: int = 0) -> SampledSignal:
        t = t0 + dt * np.arange(n)
        return SampledSignal(t0, dt, self.evaluate(t, order))

    def sample_stack(self, t0: float, dt: float, n: int, max_order: int) -> SampledSignal:
        t = t0 + dt * np.arange(n)
        return SampledSignal(t0, dt, self.derivative_stack(t, max_order))


@dataclass(frozen=True)
class Term:
    """One basis term ``amp*sin(freq*t + phase)``, ``amp*cos(freq*t + phase)`` or ``amp*t**power``."""

    kind: str
    amp: float
    freq: float = 0.0
    phase: float = 0.0
    power: int = 0

    def __post_init__(self):
        if self.kind not in ("sin", "cos", "poly"):
            raise ValueError(f"unknown term kind {self.kind!r}")
        if self.kind == "poly" and self.power < 0:
            raise ValueError("polynomial power must be non-negative")

    def evaluate(self, t: np.ndarray, order: int) -> np.ndarray:
        if self.kind == "poly":
            k = self.power
            if order > k:
                return np.zeros_like(t)
            coef = self.amp * np.prod(np.arange(k - order + 1, k + 1), dtype=float)
            return coef * t ** (k - order)
        # d^j sin(x) = sin(x + j*pi/2)
        shift = self.phase + order * np.pi / 2
        scale = self.amp * self.freq**order
        fn = np.sin if self.kind == "sin" else np.cos
        return scale * fn(self.freq * t + shift)

    def shifted(self, tau: float) -> "Term":
        """Term of ``f(t - tau)``."""
        if self.kind == "poly":
            raise ValueError("time shift of polynomial terms is not closed in the basis")
        return Term(self.kind, self.amp, self.freq, self.phase - self.freq * tau)


@dataclass(frozen=True)
class AnalyticSignal(ContinuousSignal):
    """Finite basis expansion per channel (sines, cosines, monomials); infinitely differentiable."""

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(tuple(ch) for ch in self.terms))

    @property
    def n_channels(self) -> int:
        return len(self.terms)

    def evaluate(self, t, order: int = 0) -> np.ndarray:
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((self.n_channels, t.size))
        for i, channel in enumerate(self.terms):
            for term in channel:
                out[i] += term.evaluate(t, order)
        return out

    def __add__(self, other: "AnalyticSignal") -> "AnalyticSignal":
        if other.n_channels != self.n_channels:
            raise ValueError("channel count mismatch")
        return AnalyticSignal(tuple(a + b for a, b in zip(self.terms, other.terms)))

    def scaled(self, c: float) -> "AnalyticSignal":
        return AnalyticSignal(tuple(
            tuple(Term(tm.kind, c * tm.amp, tm.freq, tm.phase, tm.power) for tm in ch)
            for ch in self.terms))

    def shifted(self, tau: float) -> "AnalyticSignal":
        return AnalyticSignal(tuple(tuple(tm.shifted(tau) for tm in ch) for ch in self.terms))

    @classmethod
    def zeros(cls, n_channels: int) -> "AnalyticSignal":
        return cls(tuple(() for _ in range(n_channels)))

    @classmethod
    def trigonometric(cls, sin_coeffs, cos_coeffs, freqs) -> "AnalyticSignal":
        """Channels ``sum_k a[i,k] sin(w_k t) + b[i,k] cos(w_k t)``."""
        a = np.atleast_2d(sin_coeffs)
        b = np.atleast_2d(cos_coeffs)
        freqs = np.asarray(freqs, dtype=float)
        channels = []
        for ai, bi in zip(a, b):
            ch = []
            for ak, bk, wk in zip(ai, bi, freqs):
                ch.append(Term("sin", float(ak), float(wk)))
                ch.append(Term("cos", float(bk), float(wk)))
            channels.append(tuple(ch))
        return cls(tuple(channels))

    @classmethod
    def polynomial(cls, coeffs) -> "AnalyticSignal":
        """Single channel ``sum_k coeffs[k] t**k``."""
        return cls(((tuple(Term("poly", float(c), power=k) for k, c in enumerate(coeffs))),))


class SplineSignal(ContinuousSignal):
    """Piecewise-polynomial signal backed by a :class:`scipy.interpolate.BSpline` with one output per channel."""

    def __init__(self, spline):
        self.spline = spline
        c = np.asarray(spline.c)
        self.n_channels = 1 if c.ndim == 1 else c.shape[1]
        self.degree = int(spline.k)

    def evaluate(self, t, order: int = 0) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if order > self.degree:
            return np.zeros((self.n_channels, t.size))
        vals = self.spline(t, nu=order, extrapolate=True)
        return np.asarray(vals).reshape(t.size, self.n_channels).T
