"""Dense linear-algebra substrate.

Matrices are plain ``numpy.ndarray`` objects in float64.  Every routine here is
a pure function of its arguments.
"""

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, RankDeficient

__all__ = [
    "as_matrix",
    "thin_qr",
    "top_k_left_singular_vectors",
    "top_k_right_singular_vectors",
    "spectral_norm",
    "power_spectral_norm",
    "sigma_min",
    "vectorize",
    "unvectorize",
    "row_kron",
]

RANK_RTOL = 1e-12


def as_matrix(A, name="A"):
    """Return ``A`` as a finite 2-D float64 array, raising on bad input."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidParameter(f"{name} contains NaN or Inf")
    return A


def thin_qr(A):
    """Thin QR factorization with a positive diagonal on ``R``.

    Parameters
    ----------
    A : array_like, (d, k) with d >= k
        Must have full column rank.

    Returns
    -------
    Q : ndarray, (d, k)
        Orthonormal columns.
    R : ndarray, (k, k)
        Upper triangular with strictly positive diagonal.
    """
    A = as_matrix(A)
    d, k = A.shape
    if d < k:
        raise DimensionMismatch(f"thin_qr needs rows >= cols, got {A.shape}")
    Q, R = np.linalg.qr(A, mode="reduced")
    # R shares A's singular values; the k x k SVD is cheap.
    s = np.linalg.svd(R, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= RANK_RTOL * s[0]:
        raise RankDeficient(
            f"matrix is numerically rank deficient (sigma_min/sigma_max = "
            f"{s[-1] / s[0] if s[0] else 0.0:.3e})"
        )
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs, R * signs[:, None]


def _fix_signs(U):
    # Largest-magnitude entry of each column made positive, for determinism.
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def top_k_left_singular_vectors(A, k):
    """Orthonormal basis of the top-``k`` left singular subspace of ``A``.

    Uses a full dense SVD and keeps LAPACK's ordering for ties.  Column signs
    are normalized so the largest-magnitude entry is positive.
    """
    A = as_matrix(A)
    if not 1 <= k <= min(A.shape):
        raise DimensionMismatch(f"k={k} out of range for shape {A.shape}")
    U, _, _ = np.linalg.svd(A, full_matrices=False)
    return _fix_signs(U[:, :k].copy())


def top_k_right_singular_vectors(A, k):
    return top_k_left_singular_vectors(as_matrix(A).T, k)


def spectral_norm(A, method="svd", **kwargs):
    """Largest singular value of ``A``.

    ``method="power"`` dispatches to :func:`power_spectral_norm`, which is
    cheaper for tall m x (dk) design matrices.
    """
    A = as_matrix(A)
    if A.size == 0:
        return 0.0
    if method == "power":
        return power_spectral_norm(A, **kwargs)
    if method != "svd":
        raise InvalidParameter(f"unknown method {method!r}")
    return float(np.linalg.svd(A, compute_uv=False)[0])


def power_spectral_norm(A, tol=1e-10, max_iter=10000, seed=0):
    A = as_matrix(A)
    n = A.shape[1]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = A.T @ (A @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        new = np.sqrt(ny)
        if abs(new - est) <= tol * new:
            return float(new)
        est = new
    return float(est)


def sigma_min(A):
    """Smallest singular value (of the min(m, n) computed)."""
    A = as_matrix(A)
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def vectorize(A):
    """Column-stacking vectorization: entry (i, j) lands at ``j*rows + i``."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionMismatch(f"vectorize expects a 2-D array, got {A.shape}")
    return A.reshape(-1, order="F")


def unvectorize(v, rows, cols):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size != rows * cols:
        raise DimensionMismatch(
            f"vector of shape {v.shape} cannot be reshaped to ({rows}, {cols})"
        )
    return v.reshape((rows, cols), order="F")


def row_kron(B, Y):
    """Row-wise Kronecker (face-splitting) product matching the design matrix.

    Row ``i`` of the result is ``vectorize(outer(B[i], Y[i]))``, i.e.
    ``kron(Y[i], B[i])``, so ``row_kron(X @ U, Y)`` reproduces the design
    matrix whose rows are ``vectorize(U.T @ outer(x_i, y_i))``.

    Parameters
    ----------
    B : array_like, (m, k)
    Y : array_like, (m, d)

    Returns
    -------
    ndarray, (m, k*d)
    """
    B = as_matrix(B, "B")
    Y = as_matrix(Y, "Y")
    if B.shape[0] != Y.shape[0]:
        raise DimensionMismatch(
            f"row counts differ: {B.shape[0]} vs {Y.shape[0]}"
        )
    m = B.shape[0]
    return (Y[:, :, None] * B[:, None, :]).reshape(m, -1)
