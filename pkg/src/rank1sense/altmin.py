"""Alternating minimization for rank-one Gaussian matrix sensing.

Each iteration uses fresh measurement blocks: block 0 feeds the spectral
initializer, block ``2t+1`` the V-update and block ``2t+2`` the U-update of
iteration ``t``.  With ``final_fit="extra-block"`` a last block refits ``V``
against ``U_T`` so the returned factors are paired consistently.
"""

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .diagnostics import init_operator
from .errors import InsufficientSamples, InvalidParameter, RankCollapse, RankDeficient
from .linalg import spectral_norm, thin_qr, top_k_left_singular_vectors, top_k_right_singular_vectors
from .regression import solve_sensing_step
from .sensing import GroundTruth, evaluate, sample_ensemble
from .subspace import dist

__all__ = [
    "SolverConfig",
    "ConvergenceTrace",
    "DecayRatios",
    "fast_matrix_sensing",
    "decay_ratios",
    "required_iterations",
]

METHODS = ("naive", "sketched")
FINAL_FITS = ("extra-block", "literal")


@dataclass(frozen=True)
class SolverConfig:
    d: int
    k: int
    m_per_block: int
    T: int
    eps0: float = 1e-6
    method: str = "naive"
    sketch_eps: float = 1e-6
    sketch_delta: float = 0.01
    seed: int = 0
    final_fit: str = "extra-block"
    resample: bool = True

    def __post_init__(self):
        if self.d < 1 or not 1 <= self.k <= self.d:
            raise InvalidParameter(f"need 1 <= k <= d, got d={self.d}, k={self.k}")
        if self.T < 1:
            raise InvalidParameter(f"T must be >= 1, got {self.T}")
        if not 0 < self.eps0 < 0.1:
            raise InvalidParameter(f"eps0 must lie in (0, 0.1), got {self.eps0}")
        if self.m_per_block < self.d * self.k:
            raise InsufficientSamples(
                f"m_per_block={self.m_per_block} < d*k={self.d * self.k}"
            )
        if self.method not in METHODS:
            raise InvalidParameter(f"method must be one of {METHODS}")
        if self.final_fit not in FINAL_FITS:
            raise InvalidParameter(f"final_fit must be one of {FINAL_FITS}")
        if not (0 < self.sketch_eps < 1 and 0 < self.sketch_delta < 1):
            raise InvalidParameter("sketch_eps and sketch_delta must lie in (0, 1)")

    @property
    def num_blocks(self):
        used = 2 * self.T + 1 if self.resample else 2
        return used + (self.final_fit == "extra-block")

    @property
    def total_samples(self):
        return self.num_blocks * self.m_per_block


@dataclass
class ConvergenceTrace:
    """Per-iteration record, index ``t = 0 .. T``.

    Row 0 describes the spectral initialization (``V_0`` is the top-k right
    singular subspace of the initializer).  For ``0 < t < T`` the error uses
    ``U_hat_t V_t^T``, the U-update paired with the ``V_t`` it was fitted
    against; row ``T`` holds the error of the returned matrix.  ``residual``
    is the relative inner least-squares residual of the iteration's last
    solve.  Distances are NaN when no ground truth is available.
    """

    t: list = field(default_factory=list)
    dist_U: list = field(default_factory=list)
    dist_V: list = field(default_factory=list)
    rel_error: list = field(default_factory=list)
    abs_error: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    millis: list = field(default_factory=list)
    phase_millis: dict = field(default_factory=dict)
    total_samples: int = 0
    total_millis: float = 0.0
    resample: bool = True

    def append(self, t, dist_U, dist_V, rel, absolute, residual, millis):
        self.t.append(t)
        self.dist_U.append(dist_U)
        self.dist_V.append(dist_V)
        self.rel_error.append(rel)
        self.abs_error.append(absolute)
        self.residual.append(residual)
        self.millis.append(millis)

    def __len__(self):
        return len(self.t)

    @property
    def final_rel_error(self):
        return self.rel_error[-1]

    def rows(self):
        return list(zip(self.t, self.dist_U, self.dist_V, self.rel_error,
                        self.residual, self.millis))

    def to_dict(self):
        return asdict(self)


def _ground_truth_oracle(G):
    def oracle(E):
        return evaluate(G.W, E)
    return oracle


def fast_matrix_sensing(cfg, source, init_U=None):
    """Recover a rank-``k`` matrix from rank-one Gaussian measurements.

    Parameters
    ----------
    cfg : SolverConfig
    source : GroundTruth or callable
        A ground truth (measured exactly; distances to its factors are
        traced) or a measurement oracle ``oracle(E) -> b`` over a hidden
        matrix.
    init_U : array_like, optional
        Replaces the spectral initializer; block 0 is still consumed.

    Returns
    -------
    W : ndarray, (d, d)
    trace : ConvergenceTrace
    """
    G = source if isinstance(source, GroundTruth) else None
    oracle: Callable = _ground_truth_oracle(G) if G is not None else source
    if G is not None and (G.d, G.k) != (cfg.d, cfg.k):
        raise InvalidParameter("config dimensions disagree with the ground truth")
    d, k, m = cfg.d, cfg.k, cfg.m_per_block
    W_star = G.W if G is not None else None
    W_norm = spectral_norm(W_star) if G is not None else None
    phases = dict(sampling=0.0, init=0.0, v_solve=0.0, u_solve=0.0, qr=0.0, final=0.0)
    trace = ConvergenceTrace(total_samples=cfg.total_samples, resample=cfg.resample)
    t_start = time.perf_counter()
    cache = {}

    def block(j):
        if not cfg.resample and j > 0:
            j = 1 if j <= 2 * cfg.T else j
        if j not in cache:
            tic = time.perf_counter()
            E = sample_ensemble(d, m, cfg.seed, block=j)
            cache[j] = (E, np.asarray(oracle(E), dtype=np.float64))
            phases["sampling"] += time.perf_counter() - tic
        return cache[j]

    def errors(W):
        if G is None:
            return math.nan, math.nan
        e = spectral_norm(W - W_star)
        return e / W_norm, e

    def distances(U, V):
        if G is None:
            return math.nan, math.nan
        return dist(U, G.U), dist(V, G.V)

    def orthonormalize(F, label):
        tic = time.perf_counter()
        try:
            Q, _ = thin_qr(F)
        except RankDeficient as exc:
            raise RankCollapse(f"{label} update is rank deficient: {exc}") from exc
        phases["qr"] += time.perf_counter() - tic
        return Q

    def solve(U, E, b, seed):
        V_hat, res = solve_sensing_step(
            U, E, b, method=cfg.method, eps=cfg.sketch_eps,
            delta=cfg.sketch_delta, seed=seed, return_residual=True,
        )
        bn = np.linalg.norm(b)
        return V_hat, res / bn if bn > 0 else res

    # t = 0: spectral initialization
    tic = time.perf_counter()
    E0, b0 = block(0)
    W0 = init_operator(E0, b0)
    if init_U is None:
        U = top_k_left_singular_vectors(W0, k)
    else:
        U = orthonormalize(np.asarray(init_U, dtype=np.float64), "initial")
    V0 = top_k_right_singular_vectors(W0, k)
    phases["init"] += time.perf_counter() - tic
    rel0, abs0 = errors(W0)
    trace.append(0, *distances(U, V0), rel0, abs0, math.nan,
                 1e3 * (time.perf_counter() - tic))

    V_hat = None
    for t in range(cfg.T):
        tic = time.perf_counter()
        E, b = block(2 * t + 1)
        s0 = time.perf_counter()
        V_hat, _ = solve(U, E, b, seed=cfg.seed * 1_000_003 + 2 * t + 1)
        phases["v_solve"] += time.perf_counter() - s0
        V = orthonormalize(V_hat, "V")

        E, b = block(2 * t + 2)
        s0 = time.perf_counter()
        U_hat, res = solve(V, E.swapped(), b, seed=cfg.seed * 1_000_003 + 2 * t + 2)
        phases["u_solve"] += time.perf_counter() - s0
        U = orthonormalize(U_hat, "U")

        rel, absolute = errors(U_hat @ V.T)
        trace.append(t + 1, *distances(U, V), rel, absolute, res,
                     1e3 * (time.perf_counter() - tic))

    tic = time.perf_counter()
    if cfg.final_fit == "extra-block":
        E, b = block(cfg.num_blocks - 1 if cfg.resample else 2 * cfg.T + 1)
        V_final, res = solve(U, E, b, seed=cfg.seed * 1_000_003 + 2 * cfg.T + 1)
        W = U @ V_final.T
        trace.residual[-1] = res
    else:
        W = U @ V_hat.T
    phases["final"] += time.perf_counter() - tic
    rel, absolute = errors(W)
    trace.rel_error[-1], trace.abs_error[-1] = rel, absolute
    trace.millis[-1] += 1e3 * (time.perf_counter() - tic)
    trace.phase_millis = {key: 1e3 * val for key, val in phases.items()}
    trace.total_millis = 1e3 * (time.perf_counter() - t_start)
    return W, trace


class DecayRatios(NamedTuple):
    """``ratios[j-1] = dist_V(j) / dist_U(j-1)`` for iterations ``j = 1 .. T``."""

    ratios: list
    flagged: list


def decay_ratios(trace, floor=1e-10):
    """Per-iteration contraction of the subspace distance.

    Iteration ``j`` maps ``U_{j-1}`` to ``V_j``; its ratio is
    ``dist(V_j, V*) / dist(U_{j-1}, U*)``.  Distances at or below ``floor`` are
    treated as exact recovery: ``0/0`` reports 0 and ``x/0`` with ``x > 0``
    reports ``inf``.  Iterations whose ratio is ``>= 1`` are flagged.
    """
    dU = [0.0 if x <= floor else x for x in trace.dist_U]
    dV = [0.0 if x <= floor else x for x in trace.dist_V]
    if any(math.isnan(x) for x in dU + dV):
        raise InvalidParameter("trace carries no ground-truth distances")
    ratios, flagged = [], []
    for j in range(1, len(dU)):
        num, den = dV[j], dU[j - 1]
        if den == 0.0:
            r = 0.0 if num == 0.0 else math.inf
        else:
            r = num / den
        ratios.append(r)
        if r >= 1.0:
            flagged.append(j)
    return DecayRatios(ratios, flagged)


def required_iterations(eps0, k, kappa, sigma1, c=2.0):
    """``ceil(c ln(k kappa sigma1 / eps0))``, at least 1."""
    if min(eps0, k, kappa, sigma1, c) <= 0:
        raise InvalidParameter("all arguments must be positive")
    return max(1, math.ceil(c * math.log(k * kappa * sigma1 / eps0)))
