"""Relational distillation of a linear student head from fused teacher targets.

The student maps fixed base embeddings through W x + b and L2-normalizes.
Its pairwise similarity rows, softened at temperature tau_s, are pulled
toward the fused teacher distribution by a KL objective; Euclidean (ed) and
diagonal cross-entropy (cl) objectives are available as baselines.  All
gradients are analytic and verified against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import errors
from .fusion import RANDOM_VARIANTS, FusionStrategy, fuse, fuse_prob
from .similarity import cosine_similarity_matrix, row_softmax
from .tensor import l2_normalize_rows
from .whitening import WhiteningTransform, whiten_pipeline

LOSS_KINDS = ("kl", "ed", "cl")


@dataclass
class StudentHead:
    """Linear projection W (n_s x n_base) and bias b (n_s)."""

    weight: np.ndarray
    bias: np.ndarray

    @property
    def n_s(self) -> int:
        return self.weight.shape[0]

    @property
    def n_base(self) -> int:
        return self.weight.shape[1]


def init_student_head(n_s: int, n_base: int, seed) -> StudentHead:
    """Seeded uniform init in [-1/sqrt(n_base), 1/sqrt(n_base)] for W and b."""
    if n_s < 2:
        raise errors.BadConfig(f"student dimension must be >= 2, got {n_s}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(n_base)
    return StudentHead(
        weight=rng.uniform(-bound, bound, size=(n_s, n_base)),
        bias=rng.uniform(-bound, bound, size=n_s),
    )


@dataclass(frozen=True)
class TrainConfig:
    strategy: FusionStrategy
    steps: int
    batch_pairs: int
    tau_s: float = 0.05
    tau_t: float = 0.05
    lr0: float = 1e-3
    lr_min: float = 0.0
    weight_decay: float = 1e-6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    loss_kind: str = "kl"
    reverse_kl: bool = False
    n_s: int | None = None  # defaults to the teachers' n_c
    seed: int = 0

    def __post_init__(self):
        if self.tau_s <= 0 or self.tau_t <= 0:
            raise errors.BadConfig("temperatures must be positive")
        if not self.lr0 > self.lr_min >= 0:
            raise errors.BadConfig("need lr0 > lr_min >= 0")
        if self.batch_pairs < 2:
            raise errors.BadConfig("batch_pairs must be >= 2")
        if self.steps < 1:
            raise errors.BadConfig("steps must be >= 1")
        if self.loss_kind not in LOSS_KINDS:
            raise errors.BadConfig(
                f"unknown loss {self.loss_kind!r}; choose from {', '.join(LOSS_KINDS)}"
            )


@dataclass(frozen=True)
class Batch:
    """Row-aligned positive pairs: x/y base inputs plus per-teacher embeddings."""

    x_base: np.ndarray
    y_base: np.ndarray
    x_teachers: list
    y_teachers: list


def student_forward(head: StudentHead, base) -> np.ndarray:
    """L2-normalized rows of base W^T + b."""
    base = np.asarray(base, dtype=np.float64)
    if base.shape[1] != head.n_base:
        raise errors.DimMismatch(f"head expects base dim {head.n_base}, got {base.shape[1]}")
    return l2_normalize_rows(base @ head.weight.T + head.bias)


def kl_loss(p, q) -> float:
    """(1/N) sum_i KL(p_i || q_i), with 0 * ln(0/q) taken as 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise errors.ShapeMismatch(f"shapes differ: {p.shape} vs {q.shape}")
    if np.any(q <= 0.0):
        raise errors.NonPositiveQ("target distribution must be strictly positive")
    safe_p = np.where(p > 0.0, p, 1.0)
    terms = np.where(p > 0.0, p * (np.log(safe_p) - np.log(q)), 0.0)
    return float(terms.sum() / p.shape[0])


def _forward_parts(head: StudentHead, base):
    """Pre-normalization activations, row norms, and normalized outputs."""
    base = np.asarray(base, dtype=np.float64)
    if base.shape[1] != head.n_base:
        raise errors.DimMismatch(f"head expects base dim {head.n_base}, got {base.shape[1]}")
    pre = base @ head.weight.T + head.bias
    norms = np.linalg.norm(pre, axis=1)
    small = norms <= 1e-12
    if np.any(small):
        raise errors.ZeroRow(int(np.argmax(small)))
    return pre / norms[:, None], norms


def _normalize_backward(d_phi, phi, norms):
    # d/dA of phi = A / |A| row-wise: project out the radial component.
    radial = np.einsum("ij,ij->i", d_phi, phi)
    return (d_phi - radial[:, None] * phi) / norms[:, None]


def _head_gradients(batch, d_phi_x, d_phi_y, phi_x, phi_y, nx, ny):
    d_pre_x = _normalize_backward(d_phi_x, phi_x, nx)
    d_pre_y = _normalize_backward(d_phi_y, phi_y, ny)
    grad_w = d_pre_x.T @ np.asarray(batch.x_base) + d_pre_y.T @ np.asarray(batch.y_base)
    grad_b = d_pre_x.sum(axis=0) + d_pre_y.sum(axis=0)
    return grad_w, grad_b


def batch_targets(batch: Batch, strategy: FusionStrategy, tau_t: float) -> np.ndarray:
    """Teacher target distribution: fused per-teacher cosine matrices, softened."""
    sims = [
        cosine_similarity_matrix(x, y) for x, y in zip(batch.x_teachers, batch.y_teachers)
    ]
    return fuse_prob(strategy, sims, tau_t)


def loss_and_grad(head: StudentHead, batch: Batch, config: TrainConfig):
    """KL distillation loss and exact analytic gradients for W and b.

    The teacher side is a constant: no gradient flows through the fused
    target.  weight_decay contributes lambda |W|^2 and its gradient.
    """
    q = batch_targets(batch, config.strategy, config.tau_t)
    phi_x, nx = _forward_parts(head, batch.x_base)
    phi_y, ny = _forward_parts(head, batch.y_base)
    # Student similarities come straight from unit rows; no clamp, so the
    # gradient of every entry is live.
    s = phi_x @ phi_y.T
    p = row_softmax(s, config.tau_s)
    n = s.shape[0]

    log_ratio = np.log(p) - np.log(q)
    if config.reverse_kl:
        loss = float(np.sum(q * -log_ratio) / n)
        d_s = (p - q) / (n * config.tau_s)
    else:
        row_kl = np.einsum("ij,ij->i", p, log_ratio)
        loss = float(row_kl.sum() / n)
        d_s = p * (log_ratio - row_kl[:, None]) / (n * config.tau_s)

    d_phi_x = d_s @ phi_y
    d_phi_y = d_s.T @ phi_x
    grad_w, grad_b = _head_gradients(batch, d_phi_x, d_phi_y, phi_x, phi_y, nx, ny)
    if config.weight_decay:
        loss += config.weight_decay * float(np.sum(head.weight**2))
        grad_w += 2.0 * config.weight_decay * head.weight
    return loss, grad_w, grad_b


def ed_loss_and_grad(head: StudentHead, batch: Batch):
    """Euclidean embedding regression against every teacher, averaged.

    loss = (1/(2NK)) sum_k sum_i |phi(x_i) - psi_k(x_i)|^2 + same for y.
    Requires the student dimension to equal the teachers' n_c.
    """
    n_c = np.asarray(batch.x_teachers[0]).shape[1]
    if head.n_s != n_c:
        raise errors.DimMismatch(
            f"ed loss needs student dim == teacher dim, got {head.n_s} vs {n_c}"
        )
    phi_x, nx = _forward_parts(head, batch.x_base)
    phi_y, ny = _forward_parts(head, batch.y_base)
    n = phi_x.shape[0]
    k = len(batch.x_teachers)
    loss = 0.0
    for tx, ty in zip(batch.x_teachers, batch.y_teachers):
        loss += float(np.sum((phi_x - tx) ** 2) + np.sum((phi_y - ty) ** 2))
    loss /= 2.0 * n * k
    mean_tx = np.mean(batch.x_teachers, axis=0)
    mean_ty = np.mean(batch.y_teachers, axis=0)
    d_phi_x = (phi_x - mean_tx) / n
    d_phi_y = (phi_y - mean_ty) / n
    grad_w, grad_b = _head_gradients(batch, d_phi_x, d_phi_y, phi_x, phi_y, nx, ny)
    return loss, grad_w, grad_b


def cl_loss_and_grad(head: StudentHead, batch: Batch, tau_s: float):
    """Cross-entropy of the student rows against diagonal one-hot targets."""
    phi_x, nx = _forward_parts(head, batch.x_base)
    phi_y, ny = _forward_parts(head, batch.y_base)
    s = phi_x @ phi_y.T
    p = row_softmax(s, tau_s)
    n = s.shape[0]
    loss = float(-np.sum(np.log(np.diagonal(p))) / n)
    d_s = (p - np.eye(n)) / (n * tau_s)
    d_phi_x = d_s @ phi_y
    d_phi_y = d_s.T @ phi_x
    grad_w, grad_b = _head_gradients(batch, d_phi_x, d_phi_y, phi_x, phi_y, nx, ny)
    return loss, grad_w, grad_b


def cosine_lr(step: int, total: int, lr0: float, lr_min: float) -> float:
    """Cosine annealing from lr0 at step 0 to lr_min at step == total.

    Endpoints are returned exactly; the interior follows
    lr_min + (lr0 - lr_min) (1 + cos(pi step / total)) / 2.
    """
    if total < 1 or step < 0 or step > total:
        raise errors.BadSchedule(f"need 0 <= step <= total and total >= 1, got {step}/{total}")
    if step == 0:
        return lr0
    if step == total:
        return lr_min
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + np.cos(np.pi * step / total))


@dataclass
class AdamState:
    m_w: np.ndarray
    v_w: np.ndarray
    m_b: np.ndarray
    v_b: np.ndarray
    t: int = 0


def init_adam_state(head: StudentHead) -> AdamState:
    return AdamState(
        m_w=np.zeros_like(head.weight),
        v_w=np.zeros_like(head.weight),
        m_b=np.zeros_like(head.bias),
        v_b=np.zeros_like(head.bias),
    )


def adam_step(head: StudentHead, state: AdamState, grad_w, grad_b, lr, config: TrainConfig):
    """One bias-corrected Adam update, in place on head and state."""
    if grad_w.shape != head.weight.shape or grad_b.shape != head.bias.shape:
        raise errors.ShapeMismatch("gradient shapes do not match parameters")
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
    state.t += 1
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for param, m, v, g in (
        (head.weight, state.m_w, state.v_w, grad_w),
        (head.bias, state.m_b, state.v_b, grad_b),
    ):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        param -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def gradient_check(
    loss_kind: str,
    config: TrainConfig,
    trials: int = 20,
    pairs: int = 4,
    n_base: int = 8,
    n_s: int = 6,
    n_teachers: int = 2,
    seed: int = 0,
    h: float = 1e-5,
    corrupt: bool = False,
) -> float:
    """Max relative error of analytic vs. central finite-difference gradients.

    Each trial draws a fresh random head and batch, compares the analytic
    gradient with (loss(p + h) - loss(p - h)) / 2h over every parameter, and
    scores |g_a - g_fd|_inf / max(|g_a|_inf, |g_fd|_inf, 1e-12).  Teachers
    are generated with dimension n_s so the ed loss is applicable.  corrupt
    injects a deliberate error into the analytic gradient (negative control).
    """
    if loss_kind not in LOSS_KINDS:
        raise errors.BadConfig(f"unknown loss {loss_kind!r}")

    def evaluate(head, batch):
        if loss_kind == "kl":
            return loss_and_grad(head, batch, config)
        if loss_kind == "ed":
            return ed_loss_and_grad(head, batch)
        return cl_loss_and_grad(head, batch, config.tau_s)

    worst = 0.0
    for trial in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
        bound = 1.0 / np.sqrt(n_base)
        head = StudentHead(
            weight=rng.uniform(-bound, bound, size=(n_s, n_base)),
            bias=rng.uniform(-bound, bound, size=n_s),
        )
        batch = Batch(
            x_base=rng.standard_normal((pairs, n_base)),
            y_base=rng.standard_normal((pairs, n_base)),
            x_teachers=[
                l2_normalize_rows(rng.standard_normal((pairs, n_s)))
                for _ in range(n_teachers)
            ],
            y_teachers=[
                l2_normalize_rows(rng.standard_normal((pairs, n_s)))
                for _ in range(n_teachers)
            ],
        )
        _, grad_w, grad_b = evaluate(head, batch)
        analytic = np.concatenate([grad_w.ravel(), grad_b])
        if corrupt:
            analytic = analytic.copy()
            analytic[0] += 1e-3
        params = np.concatenate([head.weight.ravel(), head.bias])
        numeric = np.empty_like(params)
        w_size = head.weight.size

        def loss_at(vec):
            probe = StudentHead(
                weight=vec[:w_size].reshape(head.weight.shape), bias=vec[w_size:]
            )
            return evaluate(probe, batch)[0]

        for i in range(params.size):
            bumped = params.copy()
            bumped[i] += h
            hi = loss_at(bumped)
            bumped[i] -= 2.0 * h
            lo = loss_at(bumped)
            numeric[i] = (hi - lo) / (2.0 * h)
        diff = np.max(np.abs(analytic - numeric))
        scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
        worst = max(worst, diff / scale)
    return worst


def _label_index(labels):
    labels = np.asarray(labels)
    uniques = np.unique(labels)
    groups = [np.nonzero(labels == u)[0] for u in uniques]
    for u, g in zip(uniques, groups):
        if g.size < 2:
            raise errors.InsufficientPairs(f"label {u} has fewer than 2 items")
    return groups


def sample_pair_batch(rng, groups, n_pairs):
    """Pick n_pairs distinct labels and one positive pair from each."""
    if n_pairs > len(groups):
        raise errors.InsufficientPairs(
            f"batch wants {n_pairs} distinct labels but only {len(groups)} exist"
        )
    chosen = rng.choice(len(groups), size=n_pairs, replace=False)
    x_idx = np.empty(n_pairs, dtype=np.intp)
    y_idx = np.empty(n_pairs, dtype=np.intp)
    for row, g in enumerate(chosen):
        pair = rng.choice(groups[g].size, size=2, replace=False)
        x_idx[row] = groups[g][pair[0]]
        y_idx[row] = groups[g][pair[1]]
    return x_idx, y_idx


def train(
    config: TrainConfig,
    base,
    labels,
    teacher_sets,
    transforms,
    on_batch=None,
):
    """Distill a student head; returns (head, history of (step, lr, loss)).

    Every step samples batch_pairs labels with a positive pair each, builds
    the fused teacher target, and applies one Adam update under the cosine
    schedule.  Fully deterministic for a given config seed.  on_batch, if
    given, receives (step, per-teacher similarity matrices, fused matrix)
    for diagnostics.
    """
    base = np.asarray(base, dtype=np.float64)
    if len(teacher_sets) == 0:
        raise errors.EmptyTeacherList("need at least one teacher")
    if len(teacher_sets) != len(transforms):
        raise errors.ShapeMismatch("one whitening transform per teacher required")
    n_cs = {t.n_c for t in transforms}
    if len(n_cs) != 1:
        raise errors.DimMismatch(f"teachers whiten to different n_c: {sorted(n_cs)}")
    for k, ts in enumerate(teacher_sets):
        if np.asarray(ts).shape[0] != base.shape[0]:
            raise errors.ShapeMismatch(f"teacher {k} is not row-aligned with base")

    whitened = [whiten_pipeline(t, ts) for t, ts in zip(transforms, teacher_sets)]
    groups = _label_index(labels)
    n_c = transforms[0].n_c
    n_s = config.n_s if config.n_s is not None else n_c

    head_ss, batch_ss, fuse_ss = np.random.SeedSequence(config.seed).spawn(3)
    head = init_student_head(n_s, base.shape[1], head_ss)
    state = init_adam_state(head)
    batch_rng = np.random.default_rng(batch_ss)
    randomized = config.strategy.variant in RANDOM_VARIANTS
    if randomized:
        step_seeds = np.random.default_rng(fuse_ss).integers(0, 2**63 - 1, size=config.steps)

    history = []
    for step in range(config.steps):
        x_idx, y_idx = sample_pair_batch(batch_rng, groups, config.batch_pairs)
        strategy = config.strategy
        if randomized:
            strategy = replace(strategy, seed=int(step_seeds[step]))
        batch = Batch(
            x_base=base[x_idx],
            y_base=base[y_idx],
            x_teachers=[z[x_idx] for z in whitened],
            y_teachers=[z[y_idx] for z in whitened],
        )
        step_config = replace(config, strategy=strategy)
        if config.loss_kind == "kl":
            loss, grad_w, grad_b = loss_and_grad(head, batch, step_config)
        elif config.loss_kind == "ed":
            loss, grad_w, grad_b = ed_loss_and_grad(head, batch)
        else:
            loss, grad_w, grad_b = cl_loss_and_grad(head, batch, config.tau_s)
        if config.loss_kind != "kl" and config.weight_decay:
            loss += config.weight_decay * float(np.sum(head.weight**2))
            grad_w = grad_w + 2.0 * config.weight_decay * head.weight
        if not np.isfinite(loss):
            raise errors.NumericFailure(f"non-finite loss at step {step}")

        lr = cosine_lr(step, config.steps, config.lr0, config.lr_min)
        adam_step(head, state, grad_w, grad_b, lr, config)
        history.append((step, lr, loss))
        if on_batch is not None:
            sims = [
                cosine_similarity_matrix(x, y)
                for x, y in zip(batch.x_teachers, batch.y_teachers)
            ]
            on_batch(step, sims, fuse(strategy, sims))
    return head, history
