"""Dense GF(2) vectors and matrices.

Vectors and matrices are plain numpy arrays with entries in {0, 1}
(dtype uint8).  All functions treat their inputs as immutable and
return fresh arrays, so values can be shared freely across workers.
"""

from __future__ import annotations

import numpy as np


class SingularMatrixError(ValueError):
    """Raised when a GF(2) matrix has no inverse."""


def asbits(a) -> np.ndarray:
    """Coerce to a uint8 array and check that every entry is 0 or 1."""
    arr = np.asarray(a, dtype=np.uint8)
    if arr.size and arr.max() > 1:
        raise ValueError("entries must be 0 or 1")
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix (or matrix-vector) product over GF(2)."""
    prod = np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)
    return (prod & 1).astype(np.uint8)


def row_echelon(m) -> tuple[np.ndarray, list[int]]:
    """Row-reduce over GF(2); returns (echelon form, pivot column list)."""
    r = asbits(m).copy()
    if r.ndim != 2:
        raise ValueError("expected a matrix")
    rows, cols = r.shape
    pivots: list[int] = []
    prow = 0
    for col in range(cols):
        if prow >= rows:
            break
        hits = np.nonzero(r[prow:, col])[0]
        if hits.size == 0:
            continue
        first = prow + hits[0]
        if first != prow:
            r[[prow, first]] = r[[first, prow]]
        below = prow + 1 + np.nonzero(r[prow + 1:, col])[0]
        r[below] ^= r[prow]
        pivots.append(col)
        prow += 1
    return r, pivots


def rank(m) -> int:
    """GF(2) row rank via Gaussian elimination."""
    _, pivots = row_echelon(m)
    return len(pivots)


def invert(m) -> np.ndarray:
    """Inverse of a square GF(2) matrix.

    Raises SingularMatrixError when no inverse exists.
    """
    a = asbits(m).copy()
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    n = a.shape[0]
    inv = np.eye(n, dtype=np.uint8)
    for col in range(n):
        hits = col + np.nonzero(a[col:, col])[0]
        if hits.size == 0:
            raise SingularMatrixError(f"matrix is singular (no pivot in column {col})")
        first = hits[0]
        if first != col:
            a[[col, first]] = a[[first, col]]
            inv[[col, first]] = inv[[first, col]]
        others = np.nonzero(a[:, col])[0]
        others = others[others != col]
        a[others] ^= a[col]
        inv[others] ^= inv[col]
    return inv


def reduce_against(echelon: np.ndarray, pivots: list[int], v) -> np.ndarray:
    """Reduce a vector against a row-echelon basis; zero iff v is in the span."""
    w = asbits(v).copy()
    for row, col in enumerate(pivots):
        if w[col]:
            w ^= echelon[row]
    return w


def in_row_space(m, v) -> bool:
    """Membership of v in the GF(2) row space of m."""
    ech, pivots = row_echelon(m)
    return not reduce_against(ech, pivots, v).any()


def all_vectors(m: int) -> np.ndarray:
    """All of GF(2)^m as a (2^m, m) matrix; row i is the LSB-first bits of i."""
    idx = np.arange(1 << m, dtype=np.int64)
    return ((idx[:, None] >> np.arange(m)) & 1).astype(np.uint8)


def sample_invertible(b: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform invertible b-by-b GF(2) matrix by rejection sampling.

    Rejection from uniform binary matrices is exactly uniform on the
    general linear group; the acceptance probability is
    prod_{i=0}^{b-1} (1 - 2^(i-b)) > 0.288, so fewer than 4 attempts
    are needed on average for every b.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    while True:
        cand = rng.integers(0, 2, size=(b, b), dtype=np.uint8)
        if rank(cand) == b:
            return cand
