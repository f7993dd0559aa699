import numpy as np
import pytest
from scipy.signal import ss2tf

from ddimage.excitation import SplineInputSpec, generate_pe_spline
from ddimage.experiment import RunConfig, default_latent, identify
from ddimage.gramian import build_pencil
from ddimage.imagerep import (
    apply_operator,
    behavior_membership_residual,
    build_image_representation,
    predict_trajectory,
)
from ddimage.lti import example_system, output_derivatives, simulate
from ddimage.pencil import embed_unimodular, staircase_reduce
from ddimage.signals import AnalyticSignal, SampledSignal


def residual_of(rep, ell, n=4001):
    pred = predict_trajectory(rep, ell, 0.0, 2e-3, n, max_order=3)
    return behavior_membership_residual(example_system(), pred.u_derivs, pred.y_derivs)


def test_shape_and_degree(exact_identification):
    rep = exact_identification.representation
    assert rep.M.shape == (2, 2)
    assert rep.latent_dim == 2
    assert rep.degree == exact_identification.embedding.nilpotency_index - 1
    assert rep.provenance["L"] == 4 and rep.provenance["lambda_reg"] == 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_image_lies_in_the_behavior_without_regularization(seed):
    ident = identify(RunConfig(derivatives="exact", lambda_reg=0.0), seed, 0.0)
    r = np.random.default_rng(seed)
    for _ in range(3):
        assert residual_of(ident.representation, default_latent(2, (1.0, 2.0, 0.5), r)) < 1e-8


def test_columns_are_multiples_of_the_transfer_polynomials(exact_identification_unregularized):
    M = exact_identification_unregularized.representation.M
    num, den = ss2tf(*[getattr(example_system(), k) for k in "ABCD"])
    for s in (0.3, -1.1, 2.0 + 0.5j):
        ab = np.array([np.polyval(den, s), np.polyval(num[0], s)])
        stacked = np.column_stack([M(s), ab])
        sv = np.linalg.svd(stacked, compute_uv=False)
        assert sv[1] < 1e-8 * sv[0]


def test_deeper_stack_gives_a_redundant_but_valid_image():
    ident = identify(RunConfig(derivatives="exact", L=5, lambda_reg=0.0), 0, 0.0)
    rep = ident.representation
    assert rep.latent_dim == 3
    ell = default_latent(3, (1.0, 2.0, 0.5), np.random.default_rng(2))
    assert residual_of(rep, ell) < 1e-8


def test_zero_latent_gives_zero_trajectory(exact_identification):
    pred = predict_trajectory(exact_identification.representation, AnalyticSignal.zeros(2), 0.0, 0.01, 50)
    assert np.all(pred.u.values == 0.0) and np.all(pred.y.values == 0.0)


def test_prediction_commutes_with_time_shift(exact_identification):
    rep = exact_identification.representation
    ell = default_latent(2, (1.0, 2.0, 0.5), np.random.default_rng(3))
    tau = 0.37
    a = predict_trajectory(rep, ell.shifted(tau), tau, 1e-2, 300)
    b = predict_trajectory(rep, ell, 0.0, 1e-2, 300)
    assert np.allclose(a.u.values, b.u.values, atol=1e-10 * (1 + np.abs(b.u.values).max()))
    assert np.allclose(a.y_derivs.values, b.y_derivs.values, atol=1e-10 * (1 + np.abs(b.y_derivs.values).max()))


def test_derivative_stacks_are_consistent(exact_identification):
    rep = exact_identification.representation
    ell = default_latent(2, (1.0, 2.0, 0.5), np.random.default_rng(8))
    dt = 1e-4
    pred = predict_trajectory(rep, ell, 0.0, dt, 2001, max_order=1)
    fd = np.gradient(pred.y.values[0], dt)
    assert np.allclose(pred.y_derivs.values[1, 2:-2], fd[2:-2], rtol=1e-5, atol=1e-5)


@pytest.mark.parametrize("c", [1.0, 10.0])
def test_behavior_membership_survives_gramian_scaling(c, exact_identification_unregularized):
    g = exact_identification_unregularized.gramian.scaled(c)
    pen = build_pencil(g)
    emb = embed_unimodular(staircase_reduce(pen.E0, pen.A0))
    rep = build_image_representation(g, emb, 0.0)
    ell = default_latent(2, (1.0, 2.0, 0.5), np.random.default_rng(1))
    assert residual_of(rep, ell) < 1e-8


def test_truncated_series_option(exact_identification_unregularized):
    ident = exact_identification_unregularized
    rep = build_image_representation(ident.gramian, ident.embedding, 0.0, max_degree=3)
    assert rep.degree == 3
    # the minimal representation has degree n; higher coefficients vanish on exact data
    full = ident.representation.M
    tail = np.abs(full.coeffs[4:]).max()
    assert tail < 1e-9 * np.abs(full.coeffs).max()


def test_mismatched_inputs_rejected(exact_identification):
    rep = exact_identification.representation
    with pytest.raises(ValueError):
        apply_operator(rep.M, AnalyticSignal.zeros(3), np.zeros(3))
    other = identify(RunConfig(derivatives="exact", L=5), 0, 0.0)
    with pytest.raises(ValueError):
        build_image_representation(exact_identification.gramian, other.embedding)


def test_membership_residual_separates_members_from_non_members():
    model = example_system()
    u = generate_pe_spline(SplineInputSpec(seed=6))
    dt = 1e-3
    us = u.sample_stack(0.0, dt, 3000, 3)
    x, _ = simulate(model, us.channels(slice(0, 1)), np.array([0.2, 0.0, -0.1]))
    ys = SampledSignal(0.0, dt, output_derivatives(model, x.values, us.values, 3))
    assert behavior_membership_residual(model, us, ys) < 1e-9
    fake = AnalyticSignal.trigonometric([[1.0]], [[0.0]], [1.5]).sample_stack(0.0, dt, 3000, 3)
    assert behavior_membership_residual(model, us, fake) > 1e-2
    with pytest.raises(ValueError):
        behavior_membership_residual(model, us, ys.channels(slice(0, 2)))
