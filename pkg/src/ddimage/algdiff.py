"""Algebraic differentiators built from Jacobi-polynomial expansions.

The estimate of the ``n``-th derivative of ``f`` at time ``t`` is the
convolution ``int_0^T g^(n)(tau) f(t - tau) dtau`` with the kernel

    g(tau) = 2/T * w(nu) * sum_j p_j(theta) / ||p_j||_w^2 * p_j(nu),   nu = 1 - 2 tau / T,

where ``p_j`` are Jacobi polynomials orthogonal w.r.t. ``w(nu) = (1-nu)^alpha (1+nu)^beta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import gammaln

from .signals import SampledSignal


@dataclass(frozen=True)
class DifferentiatorSpec:
    alpha: float = 8.0
    beta: float = 8.0
    n_expansion: int = 0
    window: float = 84e-3
    theta: float = 0.0

    def __post_init__(self):
        if not self.window > 0:
            raise ValueError("window length must be positive")
        if self.n_expansion < 0:
            raise ValueError("expansion order must be non-negative")
        if not -1.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [-1, 1]")
        if self.alpha <= -1 or self.beta <= -1:
            raise ValueError("alpha and beta must exceed -1")

    def max_order(self) -> int:
        """Largest derivative order the kernel supports (``min(alpha, beta) > n - 1``)."""
        return int(np.ceil(min(self.alpha, self.beta) + 1.0)) - 1


@dataclass(frozen=True)
class DifferentiatorKernel:
    order: int
    taps: np.ndarray
    delay: float
    dt: float

    @property
    def window(self) -> float:
        return self.dt * (len(self.taps) - 1)

    def __len__(self):
        return len(self.taps)


def jacobi_eval(j: int, alpha: float, beta: float, tau, deriv: int = 0):
    """Jacobi polynomial ``P_j^(alpha,beta)`` (or its ``deriv``-th derivative) at ``tau``."""
    if j < 0:
        raise ValueError("degree must be non-negative")
    tau = np.asarray(tau, dtype=float)
    if deriv > j:
        return np.zeros_like(tau)
    if deriv > 0:
        # d/dx P_j^(a,b) = (j+a+b+1)/2 P_{j-1}^(a+1,b+1)
        factor = np.prod([(j + alpha + beta + i) / 2.0 for i in range(1, deriv + 1)])
        return factor * jacobi_eval(j - deriv, alpha + deriv, beta + deriv, tau)
    a, b = alpha, beta
    p_prev = np.ones_like(tau)
    if j == 0:
        return p_prev
    p = 0.5 * ((a + b + 2.0) * tau + (a - b))
    for k in range(2, j + 1):
        c = 2 * k + a + b
        a1 = 2 * k * (k + a + b) * (c - 2)
        a2 = (c - 1) * (a * a - b * b)
        a3 = (c - 2) * (c - 1) * c
        a4 = 2 * (k + a - 1) * (k + b - 1) * c
        p, p_prev = ((a2 + a3 * tau) * p - a4 * p_prev) / a1, p
    return p


def jacobi_norm_sq(j: int, alpha: float, beta: float) -> float:
    """``||P_j||_w^2 = int_{-1}^1 P_j^2 (1-x)^alpha (1+x)^beta dx`` in closed form."""
    a, b = alpha, beta
    if j == 0:
        return float(np.exp((a + b + 1) * np.log(2.0) + gammaln(a + 1) + gammaln(b + 1) - gammaln(a + b + 2)))
    log_val = ((a + b + 1) * np.log(2.0) - np.log(2 * j + a + b + 1)
               + gammaln(j + a + 1) + gammaln(j + b + 1) - gammaln(j + a + b + 1) - gammaln(j + 1))
    return float(np.exp(log_val))


def _falling(x: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= x - i
    return out


def _pow_boundary(base: np.ndarray, expo: float) -> np.ndarray:
    # 0**e for e < 0 is an integrable endpoint singularity; the trapezoidal rule drops it
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.power(base, expo)
    out[~np.isfinite(out)] = 0.0
    return out


def weight_derivative(nu, alpha: float, beta: float, k: int) -> np.ndarray:
    """``d^k/dnu^k (1-nu)^alpha (1+nu)^beta`` by the Leibniz rule, zero outside (-1, 1)."""
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    inside = (nu >= -1.0) & (nu <= 1.0)
    x = np.clip(nu, -1.0, 1.0)
    out = np.zeros_like(x)
    for i in range(k + 1):
        fa = _falling(alpha, i)
        fb = _falling(beta, k - i)
        if fa == 0.0 or fb == 0.0:
            continue
        coef = comb(k, i) * (-1) ** i * fa * fb
        out += coef * _pow_boundary(1.0 - x, alpha - i) * _pow_boundary(1.0 + x, beta - (k - i))
    return np.where(inside, out, 0.0)


def kernel_function(spec: DifferentiatorSpec, order: int, tau, window: float | None = None) -> np.ndarray:
    """Analytic ``g^(order)(tau)`` on ``tau in [0, T]`` (zero elsewhere)."""
    if min(spec.alpha, spec.beta) <= order - 1:
        raise ValueError(f"min(alpha, beta) must exceed {order - 1} for derivative order {order}")
    T = spec.window if window is None else window
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    nu = 1.0 - 2.0 * tau / T
    a, b = spec.alpha, spec.beta
    # product rule for d^order/dnu^order [w(nu) p_j(nu)]
    w_derivs = [weight_derivative(nu, a, b, i) for i in range(order + 1)]
    acc = np.zeros_like(nu)
    for j in range(spec.n_expansion + 1):
        cj = float(jacobi_eval(j, a, b, spec.theta)) / jacobi_norm_sq(j, a, b)
        for i in range(order + 1):
            acc += cj * comb(order, i) * w_derivs[i] * jacobi_eval(j, a, b, nu, deriv=order - i)
    # chain rule: d nu / d tau = -2 / T
    return (2.0 / T) * (-2.0 / T) ** order * acc


def build_kernel(spec: DifferentiatorSpec, order: int, dt: float) -> DifferentiatorKernel:
    """Sample ``g^(order)`` on ``tau_i = i*dt`` and fold in trapezoidal weights.

    The window is snapped to ``round(T/dt)*dt`` so that both end points lie on
    the grid. The residual quadrature error in the zeroth discrete moment
    (``sum(taps)`` must be 1 for order 0 and 0 otherwise) is removed by adding
    a multiple of the order-0 taps. The delay is the first moment of the
    order-0 taps.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_int = int(round(spec.window / dt))
    if n_int < 1:
        raise ValueError("window shorter than one sample")
    T = n_int * dt
    tau = dt * np.arange(n_int + 1)
    weights = np.full(n_int + 1, dt)
    weights[0] = weights[-1] = 0.5 * dt
    taps0 = kernel_function(spec, 0, tau, window=T) * weights
    taps = taps0 if order == 0 else kernel_function(spec, order, tau, window=T) * weights
    target = 1.0 if order == 0 else 0.0
    taps = taps - (taps.sum() - target) * taps0 / taps0.sum()
    delay = float(np.dot(taps0, tau))
    return DifferentiatorKernel(order=order, taps=taps, delay=delay, dt=dt)


def apply_kernel(values: np.ndarray, kernel: DifferentiatorKernel) -> np.ndarray:
    """Valid-part convolution of each row with the kernel taps (warm-up samples dropped)."""
    values = np.atleast_2d(values)
    return np.vstack([np.convolve(row, kernel.taps, mode="valid") for row in values])


def estimate_derivatives(signal: SampledSignal, spec: DifferentiatorSpec, max_order: int) -> SampledSignal:
    """Estimate ``col(f, f', ..., f^(max_order))`` from samples.

    The returned grid starts once the window is filled and is shifted back by
    the kernel delay, so sample ``i`` of every order refers to the same
    compensated time.
    """
    kernels = [build_kernel(spec, k, signal.dt) for k in range(max_order + 1)]
    n_taps = len(kernels[0])
    if signal.n_samples < n_taps:
        raise ValueError(f"signal ({signal.n_samples} samples) is shorter than the window ({n_taps} taps)")
    blocks = [apply_kernel(signal.values, k) for k in kernels]
    t0 = signal.t0 + (n_taps - 1) * signal.dt - kernels[0].delay
    return SampledSignal(t0, signal.dt, np.vstack(blocks))


def frequency_response(kernel: DifferentiatorKernel, n_fft: int = 4096):
    """Magnitude of the DFT of the taps on ``n_fft`` points; returns (frequency in Hz, |H|)."""
    H = np.fft.rfft(kernel.taps, n_fft)
    freqs = np.fft.rfftfreq(n_fft, kernel.dt)
    return freqs, np.abs(H)
