"""Deterministic synthetic benchmark: base features plus K teacher embeddings.

Items are class prototypes on the unit sphere plus Gaussian noise.  Each
teacher sees the items through its own anisotropic linear map (rotation
times a log-uniform diagonal stretch), which distorts its pairwise-angle
distribution; each teacher also gets a round-robin subset of classes at a
reduced noise level, making the teachers complementary experts.

Teacher k draws its stretch exponents from +-anisotropy_log_range scaled
by ((k+1)/K)^3, so distortion strength grows steeply with teacher index
and the teachers' angle distributions are well separated from each other,
not just from the uniform law.  Base embeddings use the expert noise
level on every class but get no anisotropic advantage (mildest map, k=0
scale): the student input carries enough raw signal that distillation
quality is decided by the targets' geometry, not starved by the backbone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .tensor import l2_normalize_rows


@dataclass(frozen=True)
class SynthConfig:
    classes: int
    items_per_class: int
    base_dim: int
    teacher_dim: int
    n_teachers: int
    noise_sigma: float
    expert_noise_sigma: float
    anisotropy_log_range: float
    seed: int = 0

    def __post_init__(self):
        if self.classes < 2:
            raise errors.BadConfig("need at least 2 classes")
        if self.items_per_class < 2:
            raise errors.BadConfig("need at least 2 items per class")
        if self.teacher_dim < 2 or self.base_dim < 2:
            raise errors.BadConfig("dimensions must be >= 2")
        if self.n_teachers < 1:
            raise errors.BadConfig("need at least 1 teacher")
        if not self.expert_noise_sigma < self.noise_sigma:
            raise errors.BadConfig("expert_noise_sigma must be below noise_sigma")
        if self.anisotropy_log_range < 0:
            raise errors.BadConfig("anisotropy_log_range must be >= 0")


def random_rotation(dim: int, seed) -> np.ndarray:
    """Haar-ish random orthogonal matrix with determinant +1."""
    if dim < 2:
        raise errors.BadDimension(f"rotation needs dim >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diagonal(r))
    if np.linalg.det(q) < 0:
        q[:, -1] *= -1.0
    return q


def _anisotropic_map(out_dim, in_dim, log_range, seed):
    """Orthonormal slice times diag(exp(u)), u uniform in +-log_range."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rot_ss, stretch_ss = ss.spawn(2)
    rot = random_rotation(max(out_dim, in_dim), rot_ss)
    stretch = np.exp(
        np.random.default_rng(stretch_ss).uniform(-log_range, log_range, size=in_dim)
    )
    return rot[:out_dim, :in_dim] * stretch


def teacher_log_range(config: SynthConfig, k: int) -> float:
    """Stretch-exponent range for teacher k: cubic ramp up to the config value."""
    if not 0 <= k < config.n_teachers:
        raise errors.BadConfig(f"teacher index {k} out of range")
    return config.anisotropy_log_range * ((k + 1) / config.n_teachers) ** 3


def generate(config: SynthConfig):
    """Build (base, labels, teachers), all unit-norm rows, fully seeded."""
    root = np.random.SeedSequence(config.seed)
    proto_ss, base_map_ss, base_noise_ss, *teacher_ss = root.spawn(
        3 + 2 * config.n_teachers
    )
    n_items = config.classes * config.items_per_class
    labels = np.repeat(np.arange(config.classes), config.items_per_class)

    proto_rng = np.random.default_rng(proto_ss)
    prototypes = l2_normalize_rows(
        proto_rng.standard_normal((config.classes, config.teacher_dim))
    )

    teachers = []
    for k in range(config.n_teachers):
        map_ss, noise_ss = teacher_ss[2 * k], teacher_ss[2 * k + 1]
        sigma = np.where(
            labels % config.n_teachers == k,
            config.expert_noise_sigma,
            config.noise_sigma,
        )
        noise = np.random.default_rng(noise_ss).standard_normal(
            (n_items, config.teacher_dim)
        )
        raw = prototypes[labels] + sigma[:, None] * noise
        a_k = _anisotropic_map(
            config.teacher_dim, config.teacher_dim, teacher_log_range(config, k), map_ss
        )
        teachers.append(l2_normalize_rows(raw @ a_k.T))

    base_noise = np.random.default_rng(base_noise_ss).standard_normal(
        (n_items, config.teacher_dim)
    )
    base_raw = prototypes[labels] + config.expert_noise_sigma * base_noise
    a_base = _anisotropic_map(
        config.base_dim, config.teacher_dim, teacher_log_range(config, 0), base_map_ss
    )
    base = l2_normalize_rows(base_raw @ a_base.T)
    return base, labels, teachers
