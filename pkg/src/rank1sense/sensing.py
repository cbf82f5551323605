"""Planted low-rank ground truths and rank-one Gaussian measurement ensembles."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidParameter
from .linalg import as_matrix, thin_qr

__all__ = [
    "GroundTruth",
    "MeasurementEnsemble",
    "make_ground_truth",
    "make_rng",
    "sample_ensemble",
    "evaluate",
    "split_ensemble",
    "spectrum",
]

SPECTRUM_SHAPES = ("geometric", "linear")


def make_rng(seed, *stream):
    """PCG64 generator for the stream ``(seed, *stream)``.

    Streams are keyed through ``SeedSequence.spawn_key`` so block ``j`` of a
    run draws the same numbers no matter which other blocks are generated.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def spectrum(k, kappa, shape="geometric"):
    """Singular values from ``kappa`` down to 1, sorted descending."""
    if shape not in SPECTRUM_SHAPES:
        raise InvalidParameter(f"spectrum shape must be one of {SPECTRUM_SHAPES}")
    if k == 1:
        return np.ones(1)
    if shape == "geometric":
        s = kappa ** np.linspace(1.0, 0.0, k)
    else:
        s = np.linspace(kappa, 1.0, k)
    s[0], s[-1] = kappa, 1.0
    return s


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Planted matrix ``W* = U* diag(sigma*) V*^T``."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    seed: int | None = None
    spectrum_shape: str = "geometric"

    def __post_init__(self):
        U, V = as_matrix(self.U, "U"), as_matrix(self.V, "V")
        sigma = np.asarray(self.sigma, dtype=np.float64).reshape(-1)
        if U.shape != V.shape or U.shape[1] != sigma.size:
            raise DimensionMismatch(
                f"inconsistent factor shapes U{U.shape} sigma{sigma.shape} V{V.shape}"
            )
        if np.any(sigma <= 0) or np.any(np.diff(sigma) > 0):
            raise InvalidParameter("sigma must be positive and sorted descending")
        for f in (U, V, sigma):
            f.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "sigma", sigma)

    @property
    def d(self):
        return self.U.shape[0]

    @property
    def k(self):
        return self.U.shape[1]

    @property
    def kappa(self):
        return float(self.sigma[0] / self.sigma[-1])

    @property
    def sigma1(self):
        return float(self.sigma[0])

    @property
    def W(self):
        return (self.U * self.sigma) @ self.V.T


def make_ground_truth(d, k, kappa=1.0, spectrum_shape="geometric", seed=0):
    """Random rank-``k`` matrix with condition number ``kappa`` and sigma_k = 1.

    The column and row spaces are uniformly random (QR of Gaussian matrices).
    A rank-one truth has condition number 1 by definition, so ``k=1`` requires
    ``kappa == 1``.
    """
    if not (isinstance(d, (int, np.integer)) and isinstance(k, (int, np.integer))):
        raise InvalidParameter("d and k must be integers")
    if not 1 <= k <= d:
        raise InvalidParameter(f"need 1 <= k <= d, got k={k}, d={d}")
    if not kappa >= 1.0:
        raise InvalidParameter(f"kappa must be >= 1, got {kappa}")
    if k == 1 and kappa != 1.0:
        raise InvalidParameter("a rank-one matrix has kappa = 1")
    rng = make_rng(seed, 0)
    U, _ = thin_qr(rng.standard_normal((d, k)))
    V, _ = thin_qr(rng.standard_normal((d, k)))
    return GroundTruth(U, spectrum(k, kappa, spectrum_shape), V, seed, spectrum_shape)


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """``m`` sensing pairs; row ``i`` of ``X`` and ``Y`` holds ``x_i`` and ``y_i``.

    The sensing matrices are ``A_i = outer(x_i, y_i)``; they are never formed.
    """

    X: np.ndarray
    Y: np.ndarray
    seed: int | None = None
    block: int = 0
    offset: int = field(default=0, compare=False)

    def __post_init__(self):
        X, Y = as_matrix(self.X, "X"), as_matrix(self.Y, "Y")
        if X.shape != Y.shape:
            raise DimensionMismatch(f"X{X.shape} and Y{Y.shape} differ")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def __len__(self):
        return self.m

    def __getitem__(self, idx):
        if not isinstance(idx, slice):
            raise TypeError("ensembles only support slicing")
        start = idx.indices(self.m)[0]
        return MeasurementEnsemble(
            self.X[idx], self.Y[idx], self.seed, self.block, self.offset + start
        )

    def swapped(self):
        """Ensemble with the roles of ``x`` and ``y`` exchanged (``A_i -> A_i^T``)."""
        return MeasurementEnsemble(self.Y, self.X, self.seed, self.block, self.offset)

    def sensing_matrix(self, i):
        """Dense ``A_i``; for tests and small oracles only."""
        return np.outer(self.X[i], self.Y[i])


def sample_ensemble(d, m, seed, block=0):
    """Draw ``m`` i.i.d. pairs ``x_i, y_i ~ N(0, I_d)``, deterministic in ``(seed, block)``."""
    if int(d) < 1 or int(m) < 1:
        raise InvalidParameter(f"need d >= 1 and m >= 1, got d={d}, m={m}")
    rng = make_rng(seed, 1, block)
    X = rng.standard_normal((m, d))
    Y = rng.standard_normal((m, d))
    return MeasurementEnsemble(X, Y, seed, block)


def evaluate(W, E):
    """Measurements ``b_i = x_i^T W y_i`` for every pair of ``E``."""
    W = as_matrix(W, "W")
    if W.shape != (E.d, E.d):
        raise DimensionMismatch(f"W{W.shape} does not match ensemble dimension {E.d}")
    return np.einsum("ij,ij->i", E.X @ W, E.Y)


def split_ensemble(E, b, num_blocks):
    """Partition ``(E, b)`` into ``num_blocks`` contiguous blocks of equal size."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (E.m,):
        raise DimensionMismatch(f"b has shape {b.shape}, expected ({E.m},)")
    if num_blocks < 1 or E.m % num_blocks:
        raise InvalidParameter(f"m={E.m} is not divisible into {num_blocks} blocks")
    size = E.m // num_blocks
    return [
        (E[j * size:(j + 1) * size], b[j * size:(j + 1) * size])
        for j in range(num_blocks)
    ]
