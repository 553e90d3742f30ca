"""Dense linear algebra kernels used by the estimator and the batch oracle.

Matrices are plain 2-D float64 numpy arrays (row-major). Every public
function validates shapes and rejects non-finite entries, so NaN/Inf can
never propagate silently into a basis estimate.

Products and the thin QR factorization are backed by numpy's BLAS/LAPACK
(Householder reflections under the hood); the symmetric eigensolver is a
self-contained cyclic Jacobi iteration, kept independent of LAPACK so it
can serve as the ground-truth route when checking the streaming estimator.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    AsymmetryError,
    ConvergenceError,
    DegenerateBasisError,
    ParameterError,
    ShapeError,
)

_JACOBI_MAX_SWEEPS = 64


def check_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array and enforce the matrix invariants."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


def check_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float64 array with finite entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix product a @ b with explicit conformability checking."""
    a = check_matrix(a, "left operand")
    b = check_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def gram_apply(x_block, q, scale: float) -> np.ndarray:
    """Return scale * X (X^T Q) without ever forming the d x d Gram matrix.

    The association order keeps the cost at O(d*k*B) for a d x B block and a
    d x k basis, which is what makes per-block updates affordable when d is
    large.
    """
    x_block = check_matrix(x_block, "x_block")
    q = check_matrix(q, "q")
    if x_block.shape[0] != q.shape[0]:
        raise ShapeError(
            f"x_block has {x_block.shape[0]} rows but q has {q.shape[0]}; they must match"
        )
    if not math.isfinite(scale):
        raise ParameterError("scale must be finite")
    return scale * (x_block @ (x_block.T @ q))


def column_norms(a) -> np.ndarray:
    """Euclidean norm of each column."""
    a = check_matrix(a)
    return np.linalg.norm(a, axis=0)


def qr_thin(a) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization with a deterministic sign convention.

    Returns (q, r) with q of shape rows x cols having orthonormal columns and
    r upper-triangular with non-negative diagonal, which makes the
    factorization unique. Backed by LAPACK's Householder factorization; the
    sign normalization is applied on top.

    Raises DegenerateBasisError when a diagonal element of r falls below
    1e-12 times the largest column norm of the input, i.e. the input is
    numerically rank deficient.
    """
    a = check_matrix(a)
    rows, cols = a.shape
    if rows < cols:
        raise ShapeError(f"qr_thin needs rows >= cols, got {rows}x{cols}")
    q, r = np.linalg.qr(a, mode="reduced")
    max_norm = float(np.max(np.linalg.norm(a, axis=0)))
    if max_norm == 0.0:
        raise DegenerateBasisError(0, "rank-deficient input: all columns are zero")
    diag = np.abs(np.diagonal(r))
    bad = np.flatnonzero(diag < 1e-12 * max_norm)
    if bad.size:
        raise DegenerateBasisError(int(bad[0]))
    signs = np.where(np.diagonal(r) < 0.0, -1.0, 1.0)
    q = q * signs
    r = r * signs[:, None]
    return q, r


def normalize_column_signs(a) -> np.ndarray:
    """Flip column signs so the first nonzero entry of each column is positive.

    Used wherever bases are compared: eigenvectors are only defined up to
    sign, so a fixed convention makes comparisons and persisted output
    deterministic.
    """
    a = check_matrix(a)
    out = a.copy()
    for j in range(out.shape[1]):
        nz = np.flatnonzero(out[:, j])
        if nz.size and out[nz[0], j] < 0.0:
            out[:, j] = -out[:, j]
    return out


def sym_eig(c) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a symmetric matrix via cyclic Jacobi sweeps.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted descending
    and eigenvectors as orthonormal columns in the matching order. The input
    is symmetrized as (C + C^T)/2 before iterating; asymmetry beyond
    1e-10 relative to the largest entry raises AsymmetryError.

    Jacobi was chosen for its unconditional convergence on symmetric input;
    it is entirely adequate at the problem sizes this toolkit targets
    (d up to ~1000).
    """
    c = check_matrix(c)
    n, m = c.shape
    if n != m:
        raise ShapeError(f"sym_eig needs a square matrix, got {n}x{m}")
    scale = max(1.0, float(np.max(np.abs(c))))
    asym = float(np.max(np.abs(c - c.T)))
    if asym > 1e-10 * scale:
        raise AsymmetryError(f"matrix is asymmetric: max |C - C^T| = {asym:.3e}")

    a = 0.5 * (c + c.T)
    v = np.eye(n)
    fro = float(np.linalg.norm(a))
    if fro == 0.0 or n == 1:
        order = np.argsort(-np.diagonal(a), kind="stable")
        return np.diagonal(a)[order].copy(), v[:, order].copy()

    conv_tol = 1e-14 * fro
    skip_tol = conv_tol / n
    upper = np.triu_indices(n, 1)
    for _ in range(_JACOBI_MAX_SWEEPS):
        # norm of the off-diagonal part, summed directly to avoid the
        # cancellation in |A|_F^2 - |diag|_F^2
        off = math.sqrt(2.0) * float(np.linalg.norm(a[upper]))
        if off <= conv_tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip_tol:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                elif tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (tau - math.sqrt(1.0 + tau * tau))
                cth = 1.0 / math.sqrt(1.0 + t * t)
                sth = t * cth
                # two-sided rotation in the (p, q) plane: A <- J^T A J, V <- V J
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = cth * ap - sth * aq
                a[:, q] = sth * ap + cth * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = cth * rp - sth * rq
                a[q, :] = sth * rp + cth * rq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = cth * vp - sth * vq
                v[:, q] = sth * vp + cth * vq
    else:
        raise ConvergenceError(
            f"Jacobi iteration did not converge in {_JACOBI_MAX_SWEEPS} sweeps"
        )

    evals = np.diagonal(a).copy()
    order = np.argsort(-evals, kind="stable")
    return evals[order], v[:, order].copy()
