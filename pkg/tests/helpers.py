"""Shared naive reference implementations used as oracles in the test suite.

Everything in here is deliberately slow and simple: loops instead of BLAS,
explicit Gram matrices instead of factored products. The library must agree
with these, not the other way around.
"""

import math

import numpy as np


def naive_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    rows, inner = a.shape
    inner2, cols = b.shape
    assert inner == inner2
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            acc = 0.0
            for t in range(inner):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def naive_column_norms(a: np.ndarray) -> np.ndarray:
    out = np.zeros(a.shape[1])
    for j in range(a.shape[1]):
        acc = 0.0
        for i in range(a.shape[0]):
            acc += a[i, j] * a[i, j]
        out[j] = math.sqrt(acc)
    return out


def explicit_gram_times(x: np.ndarray, q: np.ndarray, scale: float) -> np.ndarray:
    """scale * (X X^T) Q with the d x d Gram matrix fully materialized."""
    gram = x @ x.T
    return scale * (gram @ q)


def random_orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q


def largest_principal_angle(q1: np.ndarray, q2: np.ndarray) -> float:
    """Largest principal angle (radians) between the column spans of q1, q2.

    Both inputs must already have orthonormal columns.
    """
    s = np.linalg.svd(q1.T @ q2, compute_uv=False)
    return math.acos(min(1.0, float(s.min())))
