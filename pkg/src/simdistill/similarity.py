"""Cosine similarity matrices, temperature softmax, and sphere-angle statistics.

The angle between two independent uniform unit vectors in R^n has density

    f(theta) = (1/sqrt(pi)) * Gamma(n/2) / Gamma((n-1)/2) * sin(theta)^(n-2)

on [0, pi].  This module evaluates f and its CDF in closed form, samples
pairwise angles from embedding sets, and measures Kolmogorov-Smirnov
distances (sample vs. theory, and sample vs. sample) to quantify how well
an embedding distribution matches the uniform-sphere ideal.
"""

from __future__ import annotations

import numpy as np
from scipy.special import betainc, gammaln

from . import errors

UNIT_NORM_TOL = 1e-6


def _check_unit_rows(x, name="embeddings"):
    norms = np.linalg.norm(x, axis=1)
    if np.max(np.abs(norms - 1.0), initial=0.0) > UNIT_NORM_TOL:
        raise errors.NotNormalized(f"{name} rows are not unit-norm within {UNIT_NORM_TOL}")


def cosine_similarity_matrix(a, b):
    """All-pairs dot products of unit-norm rows, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise errors.ShapeMismatch(f"embedding shapes differ: {a.shape} vs {b.shape}")
    _check_unit_rows(a, "left embeddings")
    _check_unit_rows(b, "right embeddings")
    return np.clip(a @ b.T, -1.0, 1.0)


def row_softmax(s, tau):
    """Row-wise softmax of s / tau, computed with max subtraction."""
    if tau <= 0:
        raise errors.BadTemperature(f"temperature must be positive, got {tau}")
    s = np.asarray(s, dtype=np.float64)
    z = s / tau
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_theta(theta):
    t = np.asarray(theta, dtype=np.float64)
    if np.any(t < 0.0) or np.any(t > np.pi):
        raise errors.ThetaOutOfRange("theta must lie in [0, pi]")
    return t


def _check_dim(n):
    if int(n) != n or n < 2:
        raise errors.BadDimension(f"dimension must be an integer >= 2, got {n}")
    return int(n)


def angle_density(n, theta):
    """Density f(theta) of the angle between uniform unit vectors in R^n.

    The gamma ratio is evaluated in log space so large n cannot overflow.
    Accepts scalar or array theta.
    """
    n = _check_dim(n)
    t = _check_theta(theta)
    const = np.exp(gammaln(n / 2.0) - gammaln((n - 1) / 2.0)) / np.sqrt(np.pi)
    return const * np.sin(t) ** (n - 2)


def angle_cdf(n, theta):
    """Integral of angle_density from 0 to theta.

    Closed form via the regularized incomplete beta function: for
    theta <= pi/2 the value is betainc((n-1)/2, 1/2, sin^2 theta) / 2, and
    the symmetry f(theta) = f(pi - theta) gives the other half.  Monotone in
    theta, exact to far better than 1e-9.
    """
    n = _check_dim(n)
    t = _check_theta(theta)
    half = 0.5 * betainc((n - 1) / 2.0, 0.5, np.sin(t) ** 2)
    out = np.where(t <= np.pi / 2.0, half, 1.0 - half)
    if np.ndim(theta) == 0:
        return float(out)
    return out


def ks_distance_to_theory(angles, n):
    """Exact one-sample KS statistic of an angle sample against angle_cdf(n, .)."""
    angles = np.asarray(angles, dtype=np.float64)
    if angles.size < 100:
        raise errors.SampleTooSmall(f"need >= 100 angles, got {angles.size}")
    t = np.sort(_check_theta(angles))
    m = t.size
    theory = angle_cdf(n, t)
    steps = np.arange(m, dtype=np.float64)
    upper = np.max((steps + 1.0) / m - theory)
    lower = np.max(theory - steps / m)
    return float(max(upper, lower))


def ks_distance_two_sample(a, b):
    """Exact two-sample KS statistic between two angle samples."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size < 1 or b.size < 1:
        raise errors.SampleTooSmall("both samples must be nonempty")
    joint = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, joint, side="right") / a.size
    cdf_b = np.searchsorted(b, joint, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def pairwise_angle_sample(x, pairs, seed):
    """Angles between `pairs` uniformly drawn distinct row pairs of x.

    Sampling is deterministic for a given seed; dot products are clamped to
    [-1, 1] before arccos so near-parallel rows cannot produce NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    rows = x.shape[0]
    if rows < 2:
        raise errors.TooFewRows("need at least 2 rows to form pairs")
    _check_unit_rows(x)
    rng = np.random.default_rng(seed)
    i = rng.integers(0, rows, size=pairs)
    j = rng.integers(0, rows - 1, size=pairs)
    j = np.where(j >= i, j + 1, j)
    dots = np.clip(np.einsum("ij,ij->i", x[i], x[j]), -1.0, 1.0)
    return np.arccos(dots)


def angle_histogram(angles, bins):
    """Density-normalized histogram of angles over [0, pi].

    Returns (bin_centers, densities).  A single bin is allowed and yields
    density 1/pi for any nonempty sample.
    """
    if bins < 1:
        raise errors.BadBins(f"bins must be >= 1, got {bins}")
    angles = np.asarray(angles, dtype=np.float64)
    if angles.size == 0:
        raise errors.SampleTooSmall("cannot histogram an empty sample")
    _check_theta(angles)
    density, edges = np.histogram(angles, bins=int(bins), range=(0.0, np.pi), density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, density
