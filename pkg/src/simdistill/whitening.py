"""PCA whitening of embedding sets.

Fits mean + projection so the training data has identity covariance in the
projected space, tracks the eigenvalue spectrum and its significant-component
count, and provides the normalize -> whiten -> normalize pipeline used before
any similarity computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .tensor import (
    FloatMatrix,
    FloatVector,
    column_mean,
    covariance,
    l2_normalize_rows,
    sym_eig_desc,
)

DEFAULT_EPS_REL = 1e-6

# Eigenvalues below this fraction of the leading one get clamped before the
# inverse square root, so fitting past the significant rank stays finite.
_LAMBDA_FLOOR_REL = 1e-18


@dataclass(frozen=True)
class WhiteningTransform:
    """Fitted whitening: y = W (x - mean), plus spectrum diagnostics.

    projection has shape (n_c, n_t); spectrum holds all n_t eigenvalues in
    descending order; significant counts those >= eps_rel * spectrum[0];
    warning is set when n_c exceeds the significant count.
    """

    mean: FloatVector
    projection: FloatMatrix
    spectrum: FloatVector
    significant: int
    n_c: int
    warning: bool

    @property
    def n_t(self) -> int:
        return self.mean.shape[0]


def significant_components(spectrum: FloatVector, eps_rel: float = DEFAULT_EPS_REL) -> int:
    """Count eigenvalues >= eps_rel * largest, clamping tiny negatives to zero."""
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.size == 0:
        raise errors.EmptySpectrum("empty eigenvalue spectrum")
    if np.any(spectrum < -1e-10):
        raise errors.DataError("spectrum has a significantly negative eigenvalue")
    if np.any(np.diff(spectrum) > 1e-10 * max(1.0, abs(float(spectrum[0])))):
        raise errors.DataError("spectrum is not sorted descending")
    clamped = np.maximum(spectrum, 0.0)
    return int(np.count_nonzero(clamped >= eps_rel * clamped[0]))


def fit_pca_whitening(
    train: FloatMatrix, n_c: int, eps_rel: float = DEFAULT_EPS_REL
) -> WhiteningTransform:
    """Fit PCA whitening on training rows (assumed L2-normalized by the caller).

    The projection is diag(lambda_1..n_c)^(-1/2) times the top-n_c eigenvector
    rows of the covariance.  If n_c exceeds the number of significant
    eigenvalues the transform still fits but carries a warning flag.
    """
    train = np.asarray(train, dtype=np.float64)
    n_t = train.shape[1]
    if not 0.0 < eps_rel < 1.0:
        raise errors.BadConfig(f"eps_rel must be in (0, 1), got {eps_rel}")
    if not 1 <= n_c <= n_t:
        raise errors.BadConfig(f"n_c must be in [1, {n_t}], got {n_c}")
    if train.shape[0] < n_c + 1:
        raise errors.TooFewSamples(
            f"need at least n_c + 1 = {n_c + 1} rows to fit, got {train.shape[0]}"
        )
    mean = column_mean(train)
    eig = sym_eig_desc(covariance(train))
    lam = eig.eigenvalues
    if lam[0] <= 1e-12:
        raise errors.RankDeficient("leading covariance eigenvalue is numerically zero")
    s_sig = significant_components(lam, eps_rel)
    warn = n_c > s_sig
    top = np.maximum(lam[:n_c], lam[0] * _LAMBDA_FLOOR_REL)
    projection = eig.eigenvectors[:, :n_c].T / np.sqrt(top)[:, None]
    return WhiteningTransform(
        mean=mean,
        projection=projection,
        spectrum=lam,
        significant=s_sig,
        n_c=n_c,
        warning=warn,
    )


def apply_whitening(t: WhiteningTransform, x: FloatMatrix) -> FloatMatrix:
    """Project rows: W (x_i - mean)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1] != t.n_t:
        raise errors.DimMismatch(f"transform expects dim {t.n_t}, got {x.shape[1]}")
    return (x - t.mean) @ t.projection.T


def whiten_pipeline(t: WhiteningTransform, x: FloatMatrix) -> FloatMatrix:
    """L2-normalize, whiten, L2-normalize again."""
    return l2_normalize_rows(apply_whitening(t, l2_normalize_rows(x)))


def identity_transform(n_t: int) -> WhiteningTransform:
    """Pass-through transform; whiten_pipeline then reduces to row normalization."""
    return WhiteningTransform(
        mean=np.zeros(n_t),
        projection=np.eye(n_t),
        spectrum=np.ones(n_t),
        significant=n_t,
        n_c=n_t,
        warning=False,
    )
