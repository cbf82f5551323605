"""Empirical checks of the concentration quantities that govern convergence.

Covers the spectral initializer ``W0``, the ``B`` and ``G`` probe operators,
the sample-size formula, Gaussian fourth moments, the ``Z_i`` norms, and the
kd x kd block matrices ``B, C, D, S`` with the error term ``F`` that drive one
shrinking step of alternating minimization.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    InvalidParameter,
    NotOrthogonal,
    NotUnit,
    SingularB,
)
from .linalg import as_matrix, sigma_min, spectral_norm, thin_qr, unvectorize, vectorize
from .regression import solve_sensing_step
from .sensing import evaluate, make_rng
from .subspace import check_orthonormal, dist

__all__ = [
    "OperatorReport",
    "BlockMatrices",
    "ShrinkingReport",
    "ZNormReport",
    "init_operator",
    "b_operators",
    "g_operators",
    "sample_size",
    "fourth_moment_check",
    "z_norm_check",
    "random_probe",
    "orthogonal_complement",
    "build_block_matrices",
    "shrinking_step_report",
    "check_all",
]

UNIT_TOL = 1e-10
MAX_BLOCK_DIM = 4096


def init_operator(E, b):
    """Spectral initializer ``(1/m) sum_i b_i x_i y_i^T``."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (E.m,):
        raise DimensionMismatch(f"b has shape {b.shape}, expected ({E.m},)")
    return (E.X.T * b) @ E.Y / E.m


def _check_unit(*vectors):
    for v in vectors:
        n = np.linalg.norm(v)
        if abs(n - 1.0) > UNIT_TOL:
            raise NotUnit(f"expected a unit vector, got norm {n:.12g}")


def b_operators(E, u, v):
    """``B_x = mean (y^T v)^2 x x^T`` and ``B_y = mean (x^T u)^2 y y^T``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_unit(u, v)
    wy = (E.Y @ v) ** 2
    wx = (E.X @ u) ** 2
    Bx = (E.X.T * wy) @ E.X / E.m
    By = (E.Y.T * wx) @ E.Y / E.m
    return Bx, By


def g_operators(E, u, u_perp, v, v_perp):
    """``G_x = mean (y^T v)(y^T v_perp) x x^T`` and its mirror ``G_y``."""
    u, u_perp, v, v_perp = (np.asarray(a, dtype=np.float64) for a in (u, u_perp, v, v_perp))
    _check_unit(u, u_perp, v, v_perp)
    if abs(u @ u_perp) > UNIT_TOL or abs(v @ v_perp) > UNIT_TOL:
        raise NotOrthogonal("probe pairs must satisfy u.u_perp = v.v_perp = 0")
    wy = (E.Y @ v) * (E.Y @ v_perp)
    wx = (E.X @ u) * (E.X @ u_perp)
    Gx = (E.X.T * wy) @ E.X / E.m
    Gy = (E.Y.T * wx) @ E.Y / E.m
    return Gx, Gy


def sample_size(eps, delta, d, k, C=1.0):
    """``ceil(C eps^-2 (d + k^2) ln(d / delta))`` measurements per block."""
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise InvalidParameter("eps and delta must lie in (0, 1)")
    if not C > 0:
        raise InvalidParameter(f"C must be positive, got {C}")
    if d < 1 or k < 1:
        raise InvalidParameter("d and k must be positive")
    return math.ceil(C * eps ** -2 * (d + k * k) * math.log(d / delta))


def fourth_moment_check(d, sigma=1.0, n_samples=10**6, seed=0, chunk=200_000):
    """Monte Carlo estimate of ``E[x x^T x x^T]`` for ``x ~ N(0, sigma^2 I_d)``.

    Returns the empirical matrix and its relative spectral deviation from the
    exact value ``(d + 2) sigma^4 I_d``.
    """
    rng = make_rng(seed, 3)
    acc = np.zeros((d, d))
    left = n_samples
    while left > 0:
        n = min(chunk, left)
        x = sigma * rng.standard_normal((n, d))
        acc += (x.T * np.einsum("ij,ij->i", x, x)) @ x
        left -= n
    emp = acc / n_samples
    target = (d + 2) * sigma ** 4
    return emp, spectral_norm(emp - target * np.eye(d)) / target


@dataclass
class ZNormReport:
    max_norm: float
    bound: float
    norms: np.ndarray = field(repr=False)

    @property
    def ratio(self):
        return self.max_norm / self.bound if self.bound else float("inf")


def z_norm_check(G, E, C=1.0, sigma=1.0):
    """Norms of ``Z_i = x_i x_i^T W* y_i y_i^T`` against ``C^2 k^2 sigma^4 sigma_1*``.

    ``Z_i`` is the rank-one matrix ``b_i x_i y_i^T``, so its norm is
    ``|a_i^T Sigma c_i| ||x_i|| ||y_i||`` with ``a_i = U*^T x_i`` and
    ``c_i = V*^T y_i``; no d x d product is formed.
    """
    if E.d != G.d:
        raise DimensionMismatch(f"ensemble d={E.d} vs ground truth d={G.d}")
    a = E.X @ G.U
    c = E.Y @ G.V
    b = np.einsum("ij,j,ij->i", a, G.sigma, c)
    norms = np.abs(b) * np.linalg.norm(E.X, axis=1) * np.linalg.norm(E.Y, axis=1)
    bound = C ** 2 * G.k ** 2 * sigma ** 4 * G.sigma1
    return ZNormReport(float(norms.max()), float(bound), norms)


def random_probe(d, rng):
    """Random unit ``u`` and unit ``u_perp`` orthogonal to it."""
    Q, _ = thin_qr(rng.standard_normal((d, 2)))
    return Q[:, 0].copy(), Q[:, 1].copy()


def orthogonal_complement(Q):
    """Orthonormal basis of the complement of ``span(Q)``, shape ``(d, d - k)``."""
    Q = as_matrix(Q)
    full, _ = np.linalg.qr(Q, mode="complete")
    return full[:, Q.shape[1]:]


@dataclass
class OperatorReport:
    epsilon_target: float
    init_error: float
    b_x_error: float
    b_y_error: float
    g_x_norm: float
    g_y_norm: float
    z_max_norm: float
    m_init: int = 0
    m_probe: int = 0
    probes: int = 0
    passed: dict = field(default_factory=dict)

    CHECKS = ("init_error", "b_x_error", "b_y_error", "g_x_norm", "g_y_norm")

    def __post_init__(self):
        self.passed = {c: bool(getattr(self, c) <= self.epsilon_target) for c in self.CHECKS}

    @property
    def all_passed(self):
        return all(self.passed.values())

    def to_dict(self):
        out = asdict(self)
        out["all_passed"] = self.all_passed
        return out


def check_all(G, E_init, E_probe, eps, probes=1, seed=0):
    """Initialization, B and G norms against the target ``eps``.

    B/G norms are the worst case over ``probes`` random quadruples
    ``(u, u_perp, v, v_perp)``.
    """
    if probes < 1:
        raise InvalidParameter("need at least one probe")
    b0 = evaluate(G.W, E_init)
    W0 = init_operator(E_init, b0)
    init_error = spectral_norm(W0 - G.W) / spectral_norm(G.W)
    rng = make_rng(seed, 4)
    worst = dict(bx=0.0, by=0.0, gx=0.0, gy=0.0)
    for _ in range(probes):
        u, u_perp = random_probe(G.d, rng)
        v, v_perp = random_probe(G.d, rng)
        Bx, By = b_operators(E_probe, u, v)
        Gx, Gy = g_operators(E_probe, u, u_perp, v, v_perp)
        eye = np.eye(G.d)
        worst["bx"] = max(worst["bx"], spectral_norm(Bx - eye))
        worst["by"] = max(worst["by"], spectral_norm(By - eye))
        worst["gx"] = max(worst["gx"], spectral_norm(Gx))
        worst["gy"] = max(worst["gy"], spectral_norm(Gy))
    z = z_norm_check(G, E_init)
    return OperatorReport(
        float(eps), init_error, worst["bx"], worst["by"], worst["gx"], worst["gy"],
        z.max_norm, E_init.m, E_probe.m, probes,
    )


@dataclass
class BlockMatrices:
    """Raw-sum block matrices; divide ``B`` and ``C`` by ``m`` for averaged versions.

    Vectors of length ``k*d`` stack the columns of a ``d x k`` matrix, so
    block ``(p, q)`` acts between column ``p`` and column ``q``.
    """

    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    S: np.ndarray
    F: np.ndarray
    m: int

    @property
    def d(self):
        return self.F.shape[0]

    @property
    def k(self):
        return self.F.shape[1]

    def block(self, name, p, q):
        d = self.d
        return getattr(self, name)[p * d:(p + 1) * d, q * d:(q + 1) * d]


def _stacked_rows(a, Y):
    # Row i is kron(a_i, y_i): column-stacked layout of outer(y_i, a_i).
    m = Y.shape[0]
    return (a[:, :, None] * Y[:, None, :]).reshape(m, -1)


def build_block_matrices(G, U_t, E):
    U_t = check_orthonormal(U_t, name="U_t")
    d, k = G.d, G.k
    if U_t.shape != (d, k) or E.d != d:
        raise DimensionMismatch("U_t, ground truth and ensemble dimensions disagree")
    if d * k > MAX_BLOCK_DIM:
        raise InvalidParameter(f"d*k = {d * k} exceeds {MAX_BLOCK_DIM}")
    N_t = _stacked_rows(E.X @ U_t, E.Y)
    N_s = _stacked_rows(E.X @ G.U, E.Y)
    B = N_t.T @ N_t
    C = N_t.T @ N_s
    eye = np.eye(d)
    D = np.kron(U_t.T @ G.U, eye)
    S = np.kron(np.diag(G.sigma), eye)
    smin = sigma_min(B)
    if smin < 1e-10:
        raise SingularB(f"sigma_min(B) = {smin:.3e}")
    vecF = scipy.linalg.solve(B, (B @ D - C) @ S @ vectorize(G.V), assume_a="pos")
    return BlockMatrices(B, C, D, S, unvectorize(vecF, d, k), E.m)


@dataclass
class ShrinkingReport:
    """Error-term quantities of one alternating step started from ``U_t``.

    Norms of ``B`` and ``B D - C`` are reported averaged over ``m``.
    ``f_identity_residual`` is ``||V_hat - (W*^T U_t - F)||_F / ||V_hat||_F``;
    ``rewrite_residual`` compares ``V*_perp^T V_{t+1}`` with
    ``-V*_perp^T F R^{-1}`` relative to the former.
    """

    m: int
    d: int
    k: int
    dist_U: float
    bd_minus_c_norm: float
    bd_minus_c_ratio: float
    f_norm: float
    f_bound_general: float | None
    f_bound_refined: float
    sigma_min_B: float
    sigma_min_R: float
    sigma_min_R_bound: float
    f_identity_residual: float
    rewrite_residual: float
    vperp_wstar_norm: float
    dist_V_next: float
    eps: float | None = None
    bd_minus_c_bound: float | None = None
    normalization: str = "B, C averaged by 1/m"

    @property
    def checks(self):
        out = {
            "sigma_min_B_ge_half": self.sigma_min_B >= 0.5,
            "sigma_min_R_ge_0.2_sigma_k": self.sigma_min_R >= self.sigma_min_R_bound,
            "f_identity": self.f_identity_residual <= 1e-6,
            "rewrite_identity": self.rewrite_residual <= 1e-6,
        }
        return out

    def to_dict(self):
        out = asdict(self)
        out["checks"] = self.checks
        return out


def shrinking_step_report(G, U_t, E, eps=None):
    """Build the block matrices, take one exact V-step, and compare with the bounds.

    ``eps`` (optional) is the operator accuracy used to evaluate the
    ``||B D - C||`` and general ``||F||`` bounds.
    """
    blocks = build_block_matrices(G, U_t, E)
    d, k, m = G.d, G.k, E.m
    dist_U = dist(U_t, G.U)
    bdc = spectral_norm(blocks.B @ blocks.D - blocks.C) / m
    ratio = bdc / (k * dist_U) if dist_U > 0 else float("inf") if bdc > 0 else 0.0
    b = evaluate(G.W, E)
    V_hat = solve_sensing_step(U_t, E, b, method="naive")
    predicted = G.W.T @ U_t - blocks.F
    f_res = np.linalg.norm(V_hat - predicted) / max(np.linalg.norm(V_hat), 1e-300)
    V_next, R = thin_qr(V_hat)
    V_perp = orthogonal_complement(G.V)
    lhs = V_perp.T @ V_next
    rhs = -V_perp.T @ blocks.F @ np.linalg.inv(R)
    lhs_norm = spectral_norm(lhs)
    rewrite = spectral_norm(lhs - rhs) / lhs_norm if lhs_norm > 0 else spectral_norm(rhs)
    sigma_k = float(G.sigma[-1])
    return ShrinkingReport(
        m=m, d=d, k=k, dist_U=dist_U,
        bd_minus_c_norm=bdc,
        bd_minus_c_ratio=ratio,
        f_norm=spectral_norm(blocks.F),
        f_bound_general=(2 * eps * k ** 1.5 * G.sigma1 * dist_U) if eps is not None else None,
        f_bound_refined=0.01 * sigma_k * dist_U,
        sigma_min_B=sigma_min(blocks.B) / m,
        sigma_min_R=sigma_min(R),
        sigma_min_R_bound=0.2 * sigma_k,
        f_identity_residual=float(f_res),
        rewrite_residual=float(rewrite),
        vperp_wstar_norm=spectral_norm(V_perp.T @ G.W.T),
        dist_V_next=dist(V_next, G.V),
        eps=eps,
        bd_minus_c_bound=(eps * dist_U * k) if eps is not None else None,
    )
