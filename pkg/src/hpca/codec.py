"""Lossy window codec: orthonormal projection onto a trained basis and back.

A BasisModel is the frozen output of either the streaming estimator or the
batch oracle. Compression is y = Q^T x and reconstruction is x_hat = Q y,
so the codec has no state of its own; reconstruction quality is decided
entirely by how well the basis spans the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError, UndefinedMetricError
from .linalg import check_matrix, check_vector

# Windows reconstructed at or above this RSNR are counted as lossless and
# left out of mean-RSNR aggregation. A ratio this high (residual below
# ~1e-9 of the signal) only happens when the basis spans the window exactly,
# up to float round-off, and a handful of such windows would otherwise let
# round-off noise dominate the mean.
LOSSLESS_RSNR_DB = 180.0


@dataclass(frozen=True)
class BasisModel:
    """Frozen projection basis plus the eigenvalue estimates it came with.

    basis has shape (window_len, rank) with orthonormal columns; eigenvalues
    has shape (rank,), non-negative and sorted descending. trained_blocks
    records how many blocks (streaming) or windows (batch) produced it, and
    source is a short provenance tag such as "hpca" or "batch".
    """

    window_len: int
    rank: int
    basis: np.ndarray
    eigenvalues: np.ndarray
    trained_blocks: int
    source: str

    def __post_init__(self) -> None:
        if self.window_len < 1:
            raise ParameterError(f"window_len must be >= 1, got {self.window_len}")
        if not 1 <= self.rank <= self.window_len:
            raise ParameterError(
                f"rank must satisfy 1 <= rank <= window_len, got rank={self.rank} "
                f"window_len={self.window_len}"
            )
        if self.trained_blocks < 1:
            raise ParameterError(f"trained_blocks must be >= 1, got {self.trained_blocks}")
        if not isinstance(self.source, str) or not self.source:
            raise ParameterError("source must be a nonempty string")
        basis = check_matrix(self.basis, "basis").copy()
        if basis.shape != (self.window_len, self.rank):
            raise ShapeError(
                f"basis shape {basis.shape} does not match "
                f"(window_len, rank)=({self.window_len}, {self.rank})"
            )
        gram = basis.T @ basis
        defect = float(np.max(np.abs(gram - np.eye(self.rank))))
        if defect > 1e-10:
            raise ParameterError(f"basis columns are not orthonormal: defect {defect:.3e}")
        lam = check_vector(self.eigenvalues, "eigenvalues").copy()
        if lam.shape != (self.rank,):
            raise ShapeError(f"eigenvalues must have length {self.rank}, got {lam.shape[0]}")
        if np.any(lam < 0.0):
            raise ParameterError("eigenvalues must be non-negative")
        if np.any(np.diff(lam) > 0.0):
            raise ParameterError("eigenvalues must be sorted descending")
        basis.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def compression_ratio(self) -> float:
        return self.window_len / self.rank


@dataclass(frozen=True)
class RsnrReport:
    """Aggregate reconstruction quality over a window set.

    mean_db averages the finite per-window RSNR values; windows at or above
    LOSSLESS_RSNR_DB are excluded from the mean and counted in n_lossless.
    When every window is lossless, mean_db is +inf.
    """

    mean_db: float
    n_windows: int
    n_lossless: int
    per_window_db: np.ndarray


def compress(model: BasisModel, x) -> np.ndarray:
    """Project onto the basis: a (d,) window -> (k,) coefficients, or an
    (n, d) stack of windows (one per row) -> (n, k)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = check_vector(arr, "window")
        if arr.shape[0] != model.window_len:
            raise ShapeError(
                f"window has {arr.shape[0]} samples, model expects {model.window_len}"
            )
        return model.basis.T @ arr
    arr = check_matrix(arr, "windows")
    if arr.shape[1] != model.window_len:
        raise ShapeError(
            f"windows have {arr.shape[1]} samples each, model expects {model.window_len}"
        )
    return arr @ model.basis


def reconstruct(model: BasisModel, y) -> np.ndarray:
    """Inverse of compress up to the discarded subspace: (k,) -> (d,) or
    (n, k) -> (n, d)."""
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim == 1:
        arr = check_vector(arr, "coefficients")
        if arr.shape[0] != model.rank:
            raise ShapeError(
                f"coefficient vector has length {arr.shape[0]}, model expects {model.rank}"
            )
        return model.basis @ arr
    arr = check_matrix(arr, "coefficients")
    if arr.shape[1] != model.rank:
        raise ShapeError(
            f"coefficient rows have length {arr.shape[1]}, model expects {model.rank}"
        )
    return arr @ model.basis.T


def rsnr_db(x, x_hat) -> float:
    """Reconstruction signal-to-noise ratio 10*log10(|x|^2 / |x - x_hat|^2).

    Returns +inf when the reconstruction is exact. An all-zero x has no
    defined signal power and raises UndefinedMetricError.
    """
    x = check_vector(x, "x")
    x_hat = check_vector(x_hat, "x_hat")
    if x.shape != x_hat.shape:
        raise ShapeError(f"length mismatch: x has {x.shape[0]}, x_hat has {x_hat.shape[0]}")
    p_sig = float(np.dot(x, x))
    if p_sig == 0.0:
        raise UndefinedMetricError("RSNR is undefined for an all-zero window")
    err = x - x_hat
    p_err = float(np.dot(err, err))
    if p_err == 0.0:
        return math.inf
    return 10.0 * math.log10(p_sig / p_err)


def mean_rsnr_db(model: BasisModel, windows) -> RsnrReport:
    """Compress-and-reconstruct every window (one per row) and report RSNR."""
    w = check_matrix(windows, "windows")
    if w.shape[1] != model.window_len:
        raise ShapeError(
            f"windows have {w.shape[1]} samples each, model expects {model.window_len}"
        )
    recon = reconstruct(model, compress(model, w))
    p_sig = np.sum(np.square(w), axis=1)
    p_err = np.sum(np.square(w - recon), axis=1)
    zero_sig = np.flatnonzero(p_sig == 0.0)
    if zero_sig.size:
        raise UndefinedMetricError(f"window {zero_sig[0]} is all-zero; RSNR undefined")
    db = np.full(w.shape[0], math.inf)
    lossy = p_err > 0.0
    db[lossy] = 10.0 * np.log10(p_sig[lossy] / p_err[lossy])
    lossless = db >= LOSSLESS_RSNR_DB
    n_lossless = int(np.count_nonzero(lossless))
    if n_lossless == w.shape[0]:
        mean = math.inf
    else:
        mean = float(np.mean(db[~lossless]))
    return RsnrReport(
        mean_db=mean,
        n_windows=w.shape[0],
        n_lossless=n_lossless,
        per_window_db=db,
    )


def expected_reconstruction_error(eigenvalues, rank: int) -> float:
    """Predicted mean squared reconstruction error at the given rank: the sum
    of the eigenvalues left out of the basis."""
    lam = check_vector(eigenvalues, "eigenvalues")
    if np.any(np.diff(lam) > 0.0):
        raise ParameterError("eigenvalues must be sorted descending")
    if not 1 <= rank <= lam.shape[0]:
        raise ParameterError(
            f"rank must satisfy 1 <= rank <= {lam.shape[0]}, got {rank}"
        )
    return float(np.sum(lam[rank:]))
