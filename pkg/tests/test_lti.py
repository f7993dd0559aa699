import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from ddimage.excitation import SplineInputSpec, generate_pe_spline
from ddimage.lti import (
    StateSpaceModel,
    example_system,
    lag,
    markov_toeplitz,
    observability_matrix,
    output_derivatives,
    reconstruct_state,
    simulate,
)
from ddimage.signals import SampledSignal


def first_order_hold(model, u, x0):
    """Exact solution for piecewise-linear input via the augmented matrix exponential."""
    n, m = model.n, model.m
    F = np.zeros((n + 2 * m, n + 2 * m))
    F[:n, :n] = model.A
    F[:n, n:n + m] = model.B
    F[n:n + m, n + m:] = np.eye(m)
    E = expm(F * u.dt)
    X = np.empty((n, u.n_samples))
    X[:, 0] = x0
    for k in range(u.n_samples - 1):
        slope = (u.values[:, k + 1] - u.values[:, k]) / u.dt
        X[:, k + 1] = E[:n, :n] @ X[:, k] + E[:n, n:n + m] @ u.values[:, k] + E[:n, n + m:] @ slope
    return X


def test_simulate_matches_matrix_exponential(rng):
    model = example_system()
    u = SampledSignal(0.0, 1e-2, rng.normal(size=(1, 400)))
    x0 = rng.normal(size=3)
    x, y = simulate(model, u, x0)
    X = first_order_hold(model, u, x0)
    assert np.max(np.abs(x.values - X)) < 1e-10
    assert np.allclose(y.values, model.C @ X, atol=1e-10)


def test_simulate_fine_grid_against_exponential(rng):
    model = example_system()
    t = 1e-4 * np.arange(2001)
    u = SampledSignal(0.0, 1e-4, np.sin(3 * t)[None])
    x, _ = simulate(model, u, np.ones(3), substeps=1)
    assert np.max(np.abs(x.values - first_order_hold(model, u, np.ones(3)))) < 1e-12


def test_feedthrough_enters_output(rng):
    model = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[2.0]])
    u = SampledSignal(0.0, 0.01, np.ones((1, 5)))
    x, y = simulate(model, u)
    assert np.allclose(y.values, x.values + 2.0)


def test_simulate_rejects_wrong_channel_count():
    with pytest.raises(ValueError):
        simulate(example_system(), SampledSignal(0.0, 0.1, np.zeros((2, 3))))


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 2**32 - 1))
def test_simulate_is_linear(a, b, seed):
    model = example_system()
    r = np.random.default_rng(seed)
    u1, u2 = r.normal(size=(2, 1, 60))
    x0a, x0b = r.normal(size=(2, 3))
    sim = lambda u, x0: simulate(model, SampledSignal(0.0, 0.05, u), x0)[0].values
    lhs = sim(a * u1 + b * u2, a * x0a + b * x0b)
    rhs = a * sim(u1, x0a) + b * sim(u2, x0b)
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


def test_observability_and_lag():
    model = example_system()
    O = observability_matrix(model, 3)
    assert O.shape == (3, 3)
    assert np.allclose(O[1], model.C @ model.A)
    assert np.linalg.matrix_rank(O) == 3
    assert lag(model) == 3


def test_lag_of_unobservable_model():
    model = StateSpaceModel(np.diag([-1.0, -2.0]), [[1.0], [1.0]], [[1.0, 0.0]], [])
    with pytest.raises(ValueError, match="unobservable"):
        lag(model)


def test_markov_toeplitz_blocks():
    model = example_system()
    T = markov_toeplitz(model, 4)
    assert np.allclose(np.triu(T), 0.0)
    assert np.isclose(T[2, 0], (model.C @ model.A @ model.B).item())
    assert np.isclose(T[3, 1], (model.C @ model.A @ model.B).item())


def test_state_reconstruction_from_exact_derivatives():
    model = example_system()
    u = generate_pe_spline(SplineInputSpec(seed=3))
    dt, n = 1e-3, 3000
    us = u.sample_stack(0.0, dt, n, 3)
    x, _ = simulate(model, us.channels(slice(0, 1)))
    yd = output_derivatives(model, x.values, us.values, 2)
    xh = reconstruct_state(model, us, SampledSignal(0.0, dt, yd))
    assert np.max(np.abs(xh.values - x.values)) < 1e-9


def test_reconstruction_needs_enough_input_orders():
    model = StateSpaceModel(example_system().A, example_system().B, example_system().C, [[1.0]])
    sig = SampledSignal(0.0, 0.1, np.zeros((3, 4)))
    with pytest.raises(ValueError):
        reconstruct_state(model, SampledSignal(0.0, 0.1, np.zeros((2, 4))), sig)
    reconstruct_state(model, SampledSignal(0.0, 0.1, np.zeros((3, 4))), sig)


def test_output_derivatives_match_finite_differences():
    model = example_system()
    u = generate_pe_spline(SplineInputSpec(seed=1))
    dt = 1e-4
    us = u.sample_stack(1.0, dt, 2001, 2)
    x, y = simulate(model, us.channels(slice(0, 1)), np.array([0.3, -0.2, 0.1]))
    yd = output_derivatives(model, x.values, us.values, 1)
    fd = np.gradient(y.values[0], dt)
    assert np.max(np.abs(yd[1, 5:-5] - fd[5:-5])) < 1e-5
