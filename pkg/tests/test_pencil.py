import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import check_staircase, kronecker_pencil, random_pencil
from ddimage.pencil import (
    PolynomialMatrix,
    RankDecisionWarning,
    embed_unimodular,
    nilpotency_index,
    pencil_inverse,
    pencil_row_rank_everywhere,
    realify,
    regularized_pinv,
    staircase_reduce,
)


@pytest.mark.parametrize("eps", [[1], [2], [0, 3], [1, 1, 2], [4, 0], [2, 2]])
def test_staircase_recovers_kronecker_indices(eps, rng):
    E0, A0 = kronecker_pencil(eps, rng)
    sc = staircase_reduce(E0, A0)
    assert sc.complete
    check_staircase(E0, A0, sc)
    # block_cols[i] counts the Kronecker blocks with index >= i
    for i, ci in enumerate(sc.block_cols):
        assert ci == sum(e >= i for e in eps)


@pytest.mark.parametrize("eps", [[1], [3], [0, 2], [1, 1, 3], [2, 4]])
def test_nilpotency_index_is_largest_index_plus_one(eps, rng):
    E0, A0 = kronecker_pencil(eps, rng)
    emb = embed_unimodular(staircase_reduce(E0, A0))
    assert emb.nilpotency_index == max(eps) + 1
    N = emb.E3 @ np.linalg.inv(emb.A3)
    assert np.linalg.norm(np.linalg.matrix_power(N, emb.nilpotency_index)) < 1e-10


def test_embedding_is_unimodular_and_both_constructions_agree(rng):
    E0, A0 = kronecker_pencil([0, 2, 3], rng)
    emb = embed_unimodular(staircase_reduce(E0, A0))
    pts = [0.0, 1.3, -2.0, 0.5j, 2 - 1j]
    dets = [np.linalg.det(emb.pencil(s)) for s in pts]
    assert abs(dets[0]) > 1e-8
    assert np.allclose(dets, dets[0], rtol=1e-10)
    assert np.all(np.diag(np.diag(emb.A3)) - np.triu(emb.A3) == -np.triu(emb.A3, 1))
    for s in pts:
        G = emb.G(s, E0, A0)
        assert np.allclose(G, emb.G_from_staircase(s), atol=1e-10)
        assert abs(np.linalg.det(G)) == pytest.approx(abs(dets[0]), rel=1e-9)


def test_polynomial_inverse(rng):
    E0, A0 = kronecker_pencil([1, 3], rng)
    emb = embed_unimodular(staircase_reduce(E0, A0))
    inv = pencil_inverse(emb)
    assert inv.degree == emb.nilpotency_index - 1
    for s in (0.0, 0.7, -1.5 + 2j):
        assert np.allclose(emb.pencil(s) @ inv(s), np.eye(emb.A3.shape[0]), atol=1e-9)
    assert pencil_inverse(emb, max_degree=6).degree == 6
    with pytest.raises(ValueError):
        pencil_inverse(emb, max_degree=1)
    reg = pencil_inverse(emb, lambda_reg=1e-14)
    assert np.allclose(reg(0.4), inv(0.4), atol=1e-8)


def test_single_row_pencil_by_hand():
    # s [0 1] - [1 0]: one stair with a 1 x 1 full-row-rank block
    E0 = np.array([[0.0, 1.0]])
    A0 = np.array([[1.0, 0.0]])
    sc = staircase_reduce(E0, A0)
    assert sc.complete and abs(sc.Q[0, 0]) == 1.0
    check_staircase(E0, A0, sc)
    assert sc.block_rows[0] == 1 and abs(sc.A_block(0, 0)[0, 0]) == pytest.approx(1.0)


def test_incomplete_reduction_is_flagged():
    # 1 x 2 pencil [s-2, 0] loses rank at s = 2
    E0 = np.array([[1.0, 0.0]])
    A0 = np.array([[2.0, 0.0]])
    sc = staircase_reduce(E0, A0)
    assert not sc.complete
    with pytest.raises(ValueError, match="incomplete"):
        embed_unimodular(sc)


def test_row_rank_sampling(rng):
    E0, A0 = kronecker_pencil([2, 1], rng)
    assert pencil_row_rank_everywhere(E0, A0)
    assert not pencil_row_rank_everywhere(np.zeros((2, 3)), np.vstack([np.ones(3), np.ones(3)]))


def test_wide_or_mismatched_input_rejected():
    with pytest.raises(ValueError):
        staircase_reduce(np.zeros((3, 2)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        staircase_reduce(np.zeros((2, 3)), np.zeros((2, 4)))


def test_ambiguous_rank_decision_warns():
    # singular values 2e-10 and 5e-11 straddle the threshold 1e-10 with no clear gap
    E0 = np.zeros((3, 4))
    E0[[0, 1, 2], [0, 1, 2]] = [1.0, 2e-10, 5e-11]
    A0 = np.eye(3, 4, 1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        staircase_reduce(E0, A0, tol=1e-10)
    assert any(issubclass(w.category, RankDecisionWarning) for w in caught)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_staircase_properties_on_random_pencils(seed):
    r = np.random.default_rng(seed)
    E0, A0 = random_pencil(r)
    sc = staircase_reduce(E0, A0)
    assert sc.complete
    check_staircase(E0, A0, sc)


def test_nilpotency_index_with_large_norm():
    N = np.diag([400.0, 400.0, 400.0], 1)
    assert nilpotency_index(N) == 4
    with pytest.raises(ValueError):
        nilpotency_index(np.eye(2))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), lam=st.sampled_from([0.0, 1e-8, 1e-2, 1.0]))
def test_regularized_pinv_matches_svd_formula(seed, lam):
    r = np.random.default_rng(seed)
    A = r.normal(size=(5, 4)) @ np.diag([1.0, 0.1, 1e-3, 0.0])
    P = regularized_pinv(A, lam)
    if lam == 0.0:
        assert np.allclose(P, np.linalg.pinv(A), atol=1e-8)
    else:
        assert np.allclose(P, np.linalg.solve(A.T @ A + lam * np.eye(4), A.T), atol=1e-6)


def test_regularized_pinv_rejects_negative_lambda():
    with pytest.raises(ValueError):
        regularized_pinv(np.eye(2), -1.0)


def test_polynomial_matrix_evaluation():
    coeffs = np.array([[[1.0, 0.0]], [[2.0, 1.0]], [[0.0, 3.0]]])
    P = PolynomialMatrix(coeffs)
    assert P.degree == 2 and P.shape == (1, 2)
    assert np.allclose(P(2.0), [[5.0, 14.0]])
    assert np.allclose(P.padded(4)(2.0), P(2.0))
    M = np.array([[1 + 2j, 0.5], [2 + 4j, 1.0]])
    R = realify(M)
    assert R.shape == (4, 4)
    assert np.linalg.matrix_rank(R) == 2 * np.linalg.matrix_rank(M)
