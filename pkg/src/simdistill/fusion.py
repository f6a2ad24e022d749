"""Element-wise fusion of teacher similarity matrices.

Five rules combine K matrices into one: mean, rand (seeded per-element
teacher pick), max-min (max over teachers on the diagonal, min elsewhere),
max-mean, and max-rand.  Diagonal entries correspond to positive pairs, so
the max-* rules keep the strongest positive evidence while treating
off-diagonal entries conservatively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .similarity import row_softmax

VARIANTS = ("mean", "rand", "max-min", "max-mean", "max-rand")
RANDOM_VARIANTS = ("rand", "max-rand")


@dataclass(frozen=True)
class FusionStrategy:
    """Fusion rule plus the seed its random variants draw from.

    per_batch switches rand/max-rand from an independent per-element teacher
    pick to a single pick for the whole matrix.
    """

    variant: str
    seed: int | None = None
    per_batch: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise errors.BadConfig(
                f"unknown fusion variant {self.variant!r}; choose from {', '.join(VARIANTS)}"
            )
        if self.variant in RANDOM_VARIANTS and self.seed is None:
            raise errors.BadConfig(f"variant {self.variant!r} requires a seed")
        if self.variant not in RANDOM_VARIANTS and self.seed is not None:
            raise errors.BadConfig(f"variant {self.variant!r} does not take a seed")


def _random_pick(stacked, strategy: FusionStrategy):
    k, n, _ = stacked.shape
    rng = np.random.default_rng(strategy.seed)
    if strategy.per_batch:
        return stacked[int(rng.integers(0, k))].copy()
    choice = rng.integers(0, k, size=(n, n))
    return np.take_along_axis(stacked, choice[None, :, :], axis=0)[0]


def fuse(strategy: FusionStrategy, teachers) -> np.ndarray:
    """Combine K same-shape square similarity matrices per the strategy."""
    if len(teachers) == 0:
        raise errors.EmptyTeacherList("need at least one teacher matrix")
    try:
        stacked = np.stack([np.asarray(t, dtype=np.float64) for t in teachers])
    except ValueError as exc:
        raise errors.ShapeMismatch("teacher matrices must all have the same shape") from exc
    n = stacked.shape[1]
    if stacked.ndim != 3 or stacked.shape[2] != n:
        raise errors.ShapeMismatch("teacher matrices must be square and same shape")
    idx = np.arange(n)
    diag_max = stacked[:, idx, idx].max(axis=0)

    if strategy.variant == "mean":
        return stacked.mean(axis=0)
    if strategy.variant == "rand":
        return _random_pick(stacked, strategy)
    if strategy.variant == "max-min":
        out = stacked.min(axis=0)
    elif strategy.variant == "max-mean":
        out = stacked.mean(axis=0)
    else:  # max-rand
        out = _random_pick(stacked, strategy)
    out[idx, idx] = diag_max
    return out


def fuse_prob(strategy: FusionStrategy, teachers, tau_t: float) -> np.ndarray:
    """Fuse raw similarities, then soften rows into distributions.

    Fusion happens in similarity space; the temperature softmax is applied
    to the fused matrix, not to per-teacher distributions.
    """
    return row_softmax(fuse(strategy, teachers), tau_t)
