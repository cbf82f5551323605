"""Inner least-squares step of alternating minimization.

For a fixed factor ``U`` the update ``argmin_V sum_i (x_i^T U V^T y_i - b_i)^2``
is the ordinary regression ``min_v ||M v - b||`` with
``M[i] = vectorize(U^T A_i)`` and ``v = vectorize(V^T)``.  Two solvers are
provided: normal equations, and a sparse-sketch preconditioned CGLS.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import (
    DimensionMismatch,
    IllConditioned,
    InvalidParameter,
    NoConvergence,
    RankDeficient,
    SketchRankDeficient,
)
from .linalg import as_matrix, row_kron, unvectorize
from .sensing import make_rng

__all__ = [
    "RegressionProblem",
    "SolveInfo",
    "build_design_matrix",
    "build_design_matrix_naive",
    "solve_naive",
    "solve_sketched",
    "sketch_rows",
    "condition_number",
    "kappa_factors",
    "sensing_objective",
    "solve_sensing_step",
]

SKETCH_ATTEMPTS = 3
MAX_CG_ITER = 500
SKETCH_FACTOR = 0.5


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    """Regression ``min_v ||M v - b||`` with ``M`` of shape ``(m, d*k)``.

    ``factors`` optionally holds ``(X U, Y)`` so that products with ``M`` can
    use the row-wise Kronecker structure instead of the dense matrix.
    """

    M: np.ndarray
    b: np.ndarray
    d: int
    k: int
    factors: tuple | None = None

    def __post_init__(self):
        M = as_matrix(self.M, "M")
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if M.shape != (b.size, self.d * self.k):
            raise DimensionMismatch(
                f"M{M.shape} inconsistent with m={b.size}, d={self.d}, k={self.k}"
            )
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", b)

    @property
    def m(self):
        return self.b.size

    def matvec(self, v):
        if self.factors is None:
            return self.M @ v
        XU, Y = self.factors
        return np.einsum("ij,ij->i", Y @ v.reshape(self.d, self.k), XU)

    def rmatvec(self, r):
        if self.factors is None:
            return self.M.T @ r
        XU, Y = self.factors
        return (Y.T @ (r[:, None] * XU)).reshape(-1)

    def residual(self, v):
        return float(np.linalg.norm(self.M @ v - self.b))

    @classmethod
    def from_sensing(cls, U, E, b):
        U = as_matrix(U, "U")
        if U.shape[0] != E.d:
            raise DimensionMismatch(f"U has {U.shape[0]} rows, ensemble has d={E.d}")
        XU = E.X @ U
        return cls(row_kron(XU, E.Y), b, E.d, U.shape[1], (XU, E.Y))


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    sketch_rows: int
    attempts: int
    cond_estimate: float
    gradient_norm: float


def build_design_matrix(U, E):
    """Design matrix with rows ``vectorize((U^T x_i) y_i^T)``; never forms ``A_i``."""
    U = as_matrix(U, "U")
    if U.shape[0] != E.d:
        raise DimensionMismatch(f"U has {U.shape[0]} rows, ensemble has d={E.d}")
    return row_kron(E.X @ U, E.Y)


def build_design_matrix_naive(U, E):
    """Reference construction through dense ``A_i``, one ``U^T A_i`` product per row."""
    U = as_matrix(U, "U")
    if U.shape[0] != E.d:
        raise DimensionMismatch(f"U has {U.shape[0]} rows, ensemble has d={E.d}")
    k = U.shape[1]
    M = np.empty((E.m, E.d * k))
    for i in range(E.m):
        M[i] = (U.T @ E.sensing_matrix(i)).reshape(-1, order="F")
    return M


def solve_naive(P):
    """Normal equations ``(M^T M)^{-1} M^T b`` by Cholesky."""
    G = P.M.T @ P.M
    rhs = P.M.T @ P.b
    ev = np.linalg.eigvalsh(G)
    if ev[-1] <= 0.0 or ev[0] <= 1e-12 * ev[-1]:
        raise IllConditioned(
            f"M^T M is numerically singular (lambda_min/lambda_max = "
            f"{ev[0] / ev[-1] if ev[-1] > 0 else 0.0:.3e})"
        )
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(G), rhs)


def sketch_rows(n, m, delta, factor=SKETCH_FACTOR):
    """Sketch size ``ceil(factor * n * ln(n / delta))``, clamped to ``[2n, m]``."""
    s = math.ceil(factor * n * math.log(n / delta))
    return int(min(m, max(s, 2 * n)))


def _apply_sketch(M, b, s, rng, kind):
    m = M.shape[0]
    if kind == "sparse":
        rows = rng.integers(0, s, size=m)
        signs = rng.choice(np.array([-1.0, 1.0]), size=m)
        S = scipy.sparse.csr_matrix((signs, (rows, np.arange(m))), shape=(s, m))
        return S @ M, S @ b
    if kind == "gaussian":
        S = rng.standard_normal((s, m)) / math.sqrt(s)
        return S @ M, S @ b
    raise InvalidParameter(f"unknown sketch kind {kind!r}")


def _ritz_extremes(alphas, betas):
    # Extreme eigenvalues of the Lanczos tridiagonal implied by CG coefficients.
    j = len(alphas)
    diag = np.empty(j)
    off = np.empty(j - 1)
    diag[0] = 1.0 / alphas[0]
    for i in range(1, j):
        diag[i] = 1.0 / alphas[i] + betas[i - 1] / alphas[i - 1]
        off[i - 1] = math.sqrt(betas[i - 1]) / alphas[i - 1]
    ev = scipy.linalg.eigvalsh_tridiagonal(diag, off)
    return max(ev[0], 0.0), ev[-1]


def solve_sketched(P, eps=1e-6, delta=0.01, seed=0, sketch="sparse",
                   factor=SKETCH_FACTOR, max_iter=MAX_CG_ITER, return_info=False):
    """Sketch-and-precondition least squares.

    The sketched matrix ``S M`` is reduced to its triangular factor ``R`` and
    CGLS runs on ``A = M R^{-1}`` from the sketch-and-solve starting point.
    With ``r = b - A w``, ``g = A^T r`` and ``kappa, sigma`` the running Ritz
    estimates of ``cond(A)`` and ``sigma_min(A)``, iteration stops at the
    first of

    * ``||g|| <= eps / (10 kappa) * ||b||``, or
    * ``||g|| / sigma <= 0.1 * sqrt(2 eps) * ||r||``, which bounds
      ``||A w - b||^2 - min ||A w - b||^2`` well inside ``(2 eps + eps^2) min``.

    Raises
    ------
    SketchRankDeficient
        When ``S M`` loses rank on three independent sketches.
    NoConvergence
        When neither criterion is met within ``max_iter`` steps.
    """
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise InvalidParameter("eps and delta must lie in (0, 1)")
    M, b = P.M, P.b
    m, n = M.shape
    if m < 2 * n:
        raise InvalidParameter(f"sketched solver needs m >= 2 dk, got m={m}, dk={n}")
    s = sketch_rows(n, m, delta, factor)

    for attempt in range(SKETCH_ATTEMPTS):
        rng = make_rng(seed, 2, attempt)
        SM, Sb = _apply_sketch(M, b, s, rng, sketch)
        R = scipy.linalg.qr(SM, mode="r", check_finite=False)[0][:n]
        rd = np.abs(np.diag(R))
        if rd.min() > 1e-12 * rd.max():
            break
    else:
        raise SketchRankDeficient(f"sketch of size {s} rank deficient after "
                                  f"{SKETCH_ATTEMPTS} attempts")
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    R = R * signs[:, None]

    def apply_A(w):
        return P.matvec(scipy.linalg.solve_triangular(R, w, check_finite=False))

    def apply_At(r):
        return scipy.linalg.solve_triangular(R, P.rmatvec(r), trans="T",
                                             check_finite=False)

    bnorm = float(np.linalg.norm(b))
    # Sketch-and-solve start: argmin ||S M R^{-1} w - S b|| = R^{-T} (S M)^T S b.
    w = scipy.linalg.solve_triangular(R, SM.T @ Sb, trans="T", check_finite=False)
    r = b - apply_A(w)
    g = apply_At(r)
    gnorm2 = float(g @ g)
    p = g.copy()
    alphas, betas = [], []
    cond, smin = 1.0, None
    it = 0
    slack = 0.1 * math.sqrt(2.0 * eps)
    while True:
        gnorm = math.sqrt(gnorm2)
        if gnorm <= eps / (10.0 * cond) * bnorm or bnorm == 0.0:
            break
        if smin and gnorm / smin <= slack * float(np.linalg.norm(r)):
            break
        if it >= max_iter:
            raise NoConvergence(
                f"CGLS did not converge in {max_iter} iterations (||A^T r|| = {gnorm:.3e})"
            )
        q = apply_A(p)
        qq = float(q @ q)
        if qq == 0.0:
            break
        alpha = gnorm2 / qq
        w += alpha * p
        r -= alpha * q
        g = apply_At(r)
        new = float(g @ g)
        beta = new / gnorm2
        alphas.append(alpha)
        betas.append(beta)
        gnorm2 = new
        p = g + beta * p
        it += 1
        lo, hi = _ritz_extremes(alphas, betas)
        if lo > 0.0:
            smin = math.sqrt(lo)
            cond = max(cond, math.sqrt(hi / lo))

    v = scipy.linalg.solve_triangular(R, w, check_finite=False)
    if return_info:
        return v, SolveInfo(it, s, attempt + 1, cond, math.sqrt(gnorm2))
    return v


def condition_number(M):
    """``sigma_max / sigma_min`` of a full-column-rank matrix, by SVD."""
    M = as_matrix(M, "M")
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= 1e-12 * s[0] or M.shape[0] < M.shape[1]:
        raise RankDeficient("condition number undefined for rank-deficient M")
    return float(s[0] / s[-1])


def kappa_factors(U, E):
    """``(kappa(M), kappa(X U), kappa(Y))`` for comparing ``kappa(M)`` with the product."""
    M = build_design_matrix(U, E)
    return condition_number(M), condition_number(E.X @ U), condition_number(E.Y)


def sensing_objective(U, V, E, b):
    """``sum_i (x_i^T U V^T y_i - b_i)^2``."""
    pred = np.einsum("ij,ij->i", E.X @ U, E.Y @ V)
    return float(np.sum((pred - b) ** 2))


def solve_sensing_step(U, E, b, method="naive", eps=1e-6, delta=0.01, seed=0,
                       return_residual=False):
    """Least-squares update ``V_hat = argmin_V sum_i (x_i^T U V^T y_i - b_i)^2``.

    The regression solution is reshaped with ``v = vectorize(V_hat^T)``.
    Pass the ensemble with ``x`` and ``y`` swapped to update ``U`` instead.
    """
    P = RegressionProblem.from_sensing(U, E, b)
    if method == "naive":
        v = solve_naive(P)
    elif method == "sketched":
        v = solve_sketched(P, eps=eps, delta=delta, seed=seed)
    else:
        raise InvalidParameter(f"unknown method {method!r}")
    V_hat = unvectorize(v, P.k, P.d).T
    if return_residual:
        return V_hat, P.residual(v)
    return V_hat
