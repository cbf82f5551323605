import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rank1sense import (
    power_spectral_norm,
    row_kron,
    sigma_min,
    spectral_norm,
    thin_qr,
    top_k_left_singular_vectors,
    top_k_right_singular_vectors,
    unvectorize,
    vectorize,
)
from rank1sense.errors import DimensionMismatch, InvalidParameter, RankDeficient
from rank1sense.subspace import sin_theta


def test_qr_of_orthonormal_is_identity(rng):
    A, _ = np.linalg.qr(rng.standard_normal((6, 3)))
    A = A * np.sign(np.diag(A))[None, :]  # any orthonormal basis; fix column signs
    Q, R = thin_qr(A)
    np.testing.assert_allclose(Q, A, atol=1e-14)
    np.testing.assert_allclose(R, np.eye(3), atol=1e-14)


def test_qr_scaled_basis_vector():
    Q, R = thin_qr(np.array([[2.0], [0.0], [0.0]]))
    np.testing.assert_allclose(Q, [[1.0], [0.0], [0.0]])
    np.testing.assert_allclose(R, [[2.0]])


def test_qr_reconstructs(rng):
    A = rng.standard_normal((20, 4))
    Q, R = thin_qr(A)
    np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-13)
    np.testing.assert_allclose(Q @ R, A, atol=1e-13)
    assert np.all(np.diag(R) > 0)
    assert np.allclose(R, np.triu(R))


def test_qr_rank_deficient():
    A = np.ones((5, 2))
    with pytest.raises(RankDeficient):
        thin_qr(A)


def test_qr_wide_rejected(rng):
    with pytest.raises((DimensionMismatch, InvalidParameter)):
        thin_qr(rng.standard_normal((2, 3)))


def test_top_k_diagonal():
    U = top_k_left_singular_vectors(np.diag([5.0, 3.0, 1.0]), 2)
    assert sin_theta(U, np.eye(3)[:, :2]) < 1e-12


def test_top_k_rank_one(rng):
    u, v = rng.standard_normal(5), rng.standard_normal(5)
    U = top_k_left_singular_vectors(np.outer(u, v), 1)
    assert min(np.linalg.norm(U[:, 0] - u / np.linalg.norm(u)),
               np.linalg.norm(U[:, 0] + u / np.linalg.norm(u))) < 1e-12


def test_top_k_random_rank_two(rng):
    L, R = rng.standard_normal((9, 2)), rng.standard_normal((9, 2))
    A = L @ R.T
    full = np.linalg.svd(A)[0][:, :2]
    assert sin_theta(top_k_left_singular_vectors(A, 2), full) < 1e-8
    assert sin_theta(top_k_right_singular_vectors(A, 2), np.linalg.qr(R)[0]) < 1e-8


def test_spectral_norm_cases(rng):
    assert spectral_norm(np.diag([3.0, 1.0, 0.0])) == pytest.approx(3.0)
    A = np.outer([1.0, 2.0], [2.0, 0.0])
    assert spectral_norm(A) == pytest.approx(2 * np.sqrt(5))
    B = rng.standard_normal((12, 7))
    s = np.linalg.svd(B, compute_uv=False)[0]
    assert spectral_norm(B) == pytest.approx(s, rel=1e-12)
    assert power_spectral_norm(B) == pytest.approx(s, rel=1e-8)
    assert spectral_norm(B, method="power") == pytest.approx(s, rel=1e-8)
    assert sigma_min(B) == pytest.approx(np.linalg.svd(B, compute_uv=False)[-1])


def test_vectorize_column_stacking():
    A = np.array([[1.0, 3.0], [2.0, 4.0]])
    np.testing.assert_array_equal(vectorize(A), [1, 2, 3, 4])
    np.testing.assert_array_equal(unvectorize(vectorize(A), 2, 2), A)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_vectorize_roundtrip(d, k, seed):
    A = np.random.default_rng(seed).standard_normal((d, k))
    np.testing.assert_array_equal(unvectorize(vectorize(A), d, k), A)


def test_row_kron_small():
    np.testing.assert_array_equal(row_kron(np.array([[2.0]]), np.array([[1.0, 3.0]])), [[2.0, 6.0]])


def test_row_kron_ones_repeats_entries(rng):
    # Row i is kron(y_i, b_i): with b_i all ones each y entry appears k times in a row.
    Y = rng.standard_normal((4, 3))
    out = row_kron(np.ones((4, 2)), Y)
    np.testing.assert_array_equal(out, np.repeat(Y, 2, axis=1))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 4), st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_row_kron_matches_kron(d, k, m, seed):
    r = np.random.default_rng(seed)
    B, Y = r.standard_normal((m, k)), r.standard_normal((m, d))
    expect = np.stack([np.kron(Y[i], B[i]) for i in range(m)])
    np.testing.assert_allclose(row_kron(B, Y), expect, rtol=0, atol=1e-14)


def test_row_kron_mismatch():
    with pytest.raises(DimensionMismatch):
        row_kron(np.ones((3, 2)), np.ones((4, 2)))


def test_nonfinite_rejected():
    with pytest.raises(InvalidParameter):
        spectral_norm(np.array([[np.nan]]))
