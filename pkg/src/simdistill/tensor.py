"""Dense float64 linear-algebra core.

Covers row normalization, column means, population covariance, symmetric
eigendecomposition (descending order, deterministic signs), and a checked
matrix product.  Everything operates on plain numpy arrays; all other
modules build on these primitives.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from . import errors

FloatMatrix = npt.NDArray[np.float64]
FloatVector = npt.NDArray[np.float64]

NORM_FLOOR = 1e-12


class EigenDecomposition(NamedTuple):
    """Eigenvalues sorted descending; eigenvector columns paired with them."""

    eigenvalues: FloatVector
    eigenvectors: FloatMatrix


def as_float_matrix(m) -> FloatMatrix:
    """Coerce to a 2-D float64 array, rejecting NaN/Inf entries."""
    out = np.asarray(m, dtype=np.float64)
    if out.ndim != 2:
        raise errors.ShapeMismatch(f"expected 2-D data, got ndim={out.ndim}")
    if not np.all(np.isfinite(out)):
        raise errors.DataError("matrix contains NaN or Inf")
    return out


def l2_normalize_rows(m: FloatMatrix) -> FloatMatrix:
    """Scale every row to unit Euclidean norm."""
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1)
    small = norms <= NORM_FLOOR
    if np.any(small):
        raise errors.ZeroRow(int(np.argmax(small)))
    return m / norms[:, None]


def column_mean(m: FloatMatrix) -> FloatVector:
    """Arithmetic mean of each column."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape[0] == 0:
        raise errors.EmptyMatrix("cannot average zero rows")
    return m.mean(axis=0)


def covariance(m: FloatMatrix) -> FloatMatrix:
    """Population covariance (divide by n) of mean-centered rows."""
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[0]
    if n < 2:
        raise errors.TooFewRows(f"covariance needs >= 2 rows, got {n}")
    centered = m - m.mean(axis=0)
    cov = centered.T @ centered / n
    # BLAS does not promise an exactly symmetric A^T A; force it.
    return 0.5 * (cov + cov.T)


def sym_eig_desc(m: FloatMatrix) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Signs are fixed so the largest-magnitude component of each eigenvector
    is non-negative, making the decomposition reproducible.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise errors.NotSquare(f"expected square matrix, got {m.shape}")
    if m.size and np.max(np.abs(m - m.T)) > 1e-9:
        raise errors.NotSymmetric("asymmetry exceeds 1e-9")
    w, v = np.linalg.eigh(m)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    anchor = np.argmax(np.abs(v), axis=0)
    flip = v[anchor, np.arange(v.shape[1])] < 0
    v[:, flip] *= -1.0
    return EigenDecomposition(w, v)


def gemm(a: FloatMatrix, b: FloatMatrix) -> FloatMatrix:
    """Checked matrix product with float64 accumulation."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[0]:
        raise errors.ShapeMismatch(f"inner dims differ: {a.shape} x {b.shape}")
    return a @ b
