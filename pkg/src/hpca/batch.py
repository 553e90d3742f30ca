"""Classical batch PCA over a fully materialized window set.

This is the ground-truth reference the streaming estimator is judged
against, and the memory baseline it is compared with: it needs every window
in memory at once plus the d x d correlation matrix. Windows are columns
here, matching the block-level math in the estimator.
"""

from __future__ import annotations

import numpy as np

from .codec import BasisModel
from .errors import ParameterError
from .linalg import check_matrix, normalize_column_signs, sym_eig


def correlation_matrix(windows) -> np.ndarray:
    """(1/N) X X^T for a d x N window set (one window per column).

    The product is symmetrized before returning to scrub round-off; no mean
    is subtracted, so this is a correlation rather than covariance matrix.
    """
    x = check_matrix(windows, "windows")
    c = (x @ x.T) / x.shape[1]
    return 0.5 * (c + c.T)


def batch_pca(windows, rank: int) -> BasisModel:
    """Top-`rank` eigenpairs of the window correlation matrix as a BasisModel.

    Eigenvalues come out descending with sign-normalized eigenvectors;
    trained_blocks records the window count N.
    """
    x = check_matrix(windows, "windows")
    d, n = x.shape
    if not 1 <= rank <= d:
        raise ParameterError(f"rank must satisfy 1 <= rank <= {d}, got {rank}")
    evals, evecs = sym_eig(correlation_matrix(x))
    # PSD by construction; only round-off can dip below zero
    tol = 1e-10 * max(1.0, float(np.max(np.abs(evals))))
    if np.any(evals < -tol):
        raise ParameterError(
            f"correlation matrix has eigenvalue {float(np.min(evals)):.3e} < 0 "
            "beyond round-off tolerance"
        )
    lam = np.clip(evals[:rank], 0.0, None)
    return BasisModel(
        window_len=d,
        rank=rank,
        basis=normalize_column_signs(evecs[:, :rank]),
        eigenvalues=lam,
        trained_blocks=n,
        source="batch",
    )
