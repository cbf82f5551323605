"""Principal-angle distances between k-dimensional column spaces."""

import numpy as np

from .errors import DimensionMismatch, NotOrthonormal
from .linalg import as_matrix

__all__ = ["check_orthonormal", "sin_theta", "cos_theta", "tan_theta", "dist"]

ORTHO_TOL = 1e-8
TAN_COS_FLOOR = 1e-12


def check_orthonormal(Q, tol=ORTHO_TOL, name="matrix"):
    Q = as_matrix(Q, name)
    k = Q.shape[1]
    err = np.linalg.norm(Q.T @ Q - np.eye(k), 2)
    if err > tol:
        raise NotOrthonormal(f"{name} is not orthonormal (||Q^T Q - I|| = {err:.2e})")
    return Q


def _pair(Y, X):
    Y = check_orthonormal(Y, name="Y")
    X = check_orthonormal(X, name="X")
    if X.shape != Y.shape:
        raise DimensionMismatch(f"shapes differ: Y{Y.shape} vs X{X.shape}")
    return Y, X


def sin_theta(Y, X):
    """Spectral norm of ``(I - Y Y^T) X``, clamped to [0, 1].

    The orthogonal complement of ``Y`` is never built.
    """
    Y, X = _pair(Y, X)
    resid = X - Y @ (Y.T @ X)
    s = np.linalg.svd(resid, compute_uv=False)[0]
    return float(min(max(s, 0.0), 1.0))


def cos_theta(Y, X):
    """Smallest singular value of ``Y^T X``, clamped to [0, 1]."""
    Y, X = _pair(Y, X)
    s = np.linalg.svd(Y.T @ X, compute_uv=False)[-1]
    return float(min(max(s, 0.0), 1.0))


def tan_theta(Y, X):
    """``sin / cos``; returns ``inf`` once the cosine drops below 1e-12."""
    c = cos_theta(Y, X)
    if c < TAN_COS_FLOOR:
        return float("inf")
    return sin_theta(Y, X) / c


def dist(Y, X):
    """Principal-angle distance, an alias of :func:`sin_theta`."""
    return sin_theta(Y, X)
