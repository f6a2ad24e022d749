"""Whitening-based multi-teacher similarity distillation for embedding retrieval."""

from .distill import (
    Batch,
    StudentHead,
    TrainConfig,
    cosine_lr,
    gradient_check,
    init_student_head,
    kl_loss,
    loss_and_grad,
    student_forward,
    train,
)
from .fusion import FusionStrategy, fuse, fuse_prob
from .metrics import (
    average_precision,
    chamfer_similarity,
    cumulative_mrr,
    map_at_k,
    mean_ap,
    mrr,
)
from .similarity import (
    angle_cdf,
    angle_density,
    angle_histogram,
    cosine_similarity_matrix,
    ks_distance_to_theory,
    ks_distance_two_sample,
    pairwise_angle_sample,
    row_softmax,
)
from .synthgen import SynthConfig, generate, random_rotation
from .whitening import (
    WhiteningTransform,
    apply_whitening,
    fit_pca_whitening,
    significant_components,
    whiten_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "FusionStrategy",
    "StudentHead",
    "SynthConfig",
    "TrainConfig",
    "WhiteningTransform",
    "angle_cdf",
    "angle_density",
    "angle_histogram",
    "apply_whitening",
    "average_precision",
    "chamfer_similarity",
    "cosine_lr",
    "cosine_similarity_matrix",
    "cumulative_mrr",
    "fit_pca_whitening",
    "fuse",
    "fuse_prob",
    "generate",
    "gradient_check",
    "init_student_head",
    "kl_loss",
    "ks_distance_to_theory",
    "ks_distance_two_sample",
    "loss_and_grad",
    "map_at_k",
    "mean_ap",
    "mrr",
    "pairwise_angle_sample",
    "random_rotation",
    "row_softmax",
    "significant_components",
    "student_forward",
    "train",
    "whiten_pipeline",
]
