import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddimage.metrics import NoiseSpec, add_noise, relative_error, snr_db
from ddimage.signals import SampledSignal


def test_equal_energy_is_zero_decibels():
    y = np.array([1.0, -1.0, 1.0])
    assert snr_db(y, -y) == pytest.approx(0.0)


def test_tenfold_amplitude_is_twenty_decibels():
    noise = np.array([0.1, 0.2, -0.3])
    assert snr_db(10 * noise, noise) == pytest.approx(20.0)


def test_snr_edge_cases():
    assert snr_db(np.ones(4), np.zeros(4)) == np.inf
    assert snr_db(np.zeros(4), np.ones(4)) == -np.inf
    with pytest.raises(ValueError):
        snr_db(np.ones(3), np.ones(4))


def test_relative_error_trivial_values():
    X = np.array([[1.0, 2.0, 4.0], [0.0, -1.0, 3.0]])
    assert relative_error(X, X) == 0.0
    assert relative_error(X, 2 * X) == pytest.approx(1.0)


def test_relative_error_uses_sample_std():
    X = np.array([[0.0, 2.0]])
    # std with ddof=1 is sqrt(2)
    assert relative_error(X, X + 1.0) == pytest.approx(np.sqrt(2) / 2)


def test_relative_error_rejects_degenerate_reference():
    with pytest.raises(ValueError):
        relative_error(np.array([[1.0, 1.0, 1.0]]), np.zeros((1, 3)))
    with pytest.raises(ValueError):
        relative_error(np.ones((2, 3)), np.ones((3, 2)))
    with pytest.raises(ValueError):
        relative_error(np.ones((2, 1)), np.ones((2, 1)))


def test_noise_is_deterministic_per_seed():
    y = SampledSignal(0.0, 0.1, np.zeros((1, 1000)))
    a, na = add_noise(y, NoiseSpec(0.5, seed=3))
    b, nb = add_noise(y, NoiseSpec(0.5, seed=3))
    c, _ = add_noise(y, NoiseSpec(0.5, seed=4))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert np.array_equal(a.values, na.values)
    assert na.values.std() == pytest.approx(0.5, rel=0.1)


def test_zero_std_adds_nothing():
    y = SampledSignal(1.0, 0.1, np.arange(5.0)[None])
    noisy, noise = add_noise(y, NoiseSpec(0.0))
    assert np.array_equal(noisy.values, y.values)
    assert snr_db(y, noise) == np.inf


def test_negative_std_rejected():
    with pytest.raises(ValueError):
        NoiseSpec(-1e-3)
    with pytest.raises(ValueError):
        NoiseSpec(float("nan"))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.floats(1e-3, 1e3), sign=st.sampled_from([-1.0, 1.0]))
def test_snr_is_invariant_to_common_scaling(seed, c, sign):
    r = np.random.default_rng(seed)
    y, e = r.normal(size=(2, 50))
    c *= sign
    assert snr_db(c * y, c * e) == pytest.approx(snr_db(y, e), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), scales=st.lists(st.floats(1e-3, 1e3), min_size=3, max_size=3))
def test_relative_error_is_invariant_to_per_state_units(seed, scales):
    r = np.random.default_rng(seed)
    X = r.normal(size=(3, 40))
    Xh = X + 0.1 * r.normal(size=(3, 40))
    D = np.array(scales)[:, None]
    assert relative_error(D * X, D * Xh) == pytest.approx(relative_error(X, Xh), rel=1e-9)
