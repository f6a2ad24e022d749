"""Retrieval metrics: AP / mAP / mAP@k, reciprocal-rank statistics, and
Chamfer aggregation of frame-level similarity matrices.

Ranking always sorts scores descending with ties broken by ascending gallery
index.  Reciprocal ranks use pessimistic tie handling: every gallery item
scoring >= the positive counts toward its rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .similarity import _check_unit_rows


@dataclass(frozen=True)
class RetrievalTask:
    """Queries, gallery, and per-query relevant gallery indices."""

    query_embeddings: np.ndarray
    gallery_embeddings: np.ndarray
    relevance: list

    def __post_init__(self):
        gallery_size = self.gallery_embeddings.shape[0]
        for q, rel in enumerate(self.relevance):
            rel = np.asarray(rel)
            if rel.size == 0:
                raise errors.NoRelevant(q)
            if rel.min() < 0 or rel.max() >= gallery_size:
                raise errors.DataError(f"query {q} has relevance index outside gallery")


def average_precision(ranked_relevance) -> float:
    """AP of a ranked boolean relevance list: mean of precision at each hit."""
    rel = np.asarray(ranked_relevance, dtype=bool)
    total = int(rel.sum())
    if total == 0:
        raise errors.NoRelevant()
    hits = np.cumsum(rel)
    positions = np.nonzero(rel)[0]
    return float(np.sum(hits[positions] / (positions + 1.0)) / total)


def _ranked_relevance(scores_row, relevant_indices):
    order = np.argsort(-scores_row, kind="stable")
    mask = np.zeros(scores_row.shape[0], dtype=bool)
    mask[np.asarray(relevant_indices, dtype=np.intp)] = True
    return mask[order]


def mean_ap(task: RetrievalTask, scores) -> float:
    """Mean AP over queries under descending-score ranking."""
    scores = np.asarray(scores, dtype=np.float64)
    aps = []
    for q, rel in enumerate(task.relevance):
        ranked = _ranked_relevance(scores[q], rel)
        if not ranked.any():
            raise errors.NoRelevant(q)
        aps.append(average_precision(ranked))
    return float(np.mean(aps))


def map_at_k(task: RetrievalTask, scores, k: int) -> float:
    """Mean AP over the top-k ranked gallery only; R is capped at min(R, k).

    A query with no relevant item in its top k contributes 0.
    """
    if k < 1:
        raise errors.BadConfig(f"k must be >= 1, got {k}")
    scores = np.asarray(scores, dtype=np.float64)
    aps = []
    for q, rel in enumerate(task.relevance):
        ranked = _ranked_relevance(scores[q], rel)
        total = min(int(ranked.sum()), k)
        if total == 0:
            raise errors.NoRelevant(q)
        top = ranked[:k]
        if not top.any():
            aps.append(0.0)
            continue
        hits = np.cumsum(top)
        positions = np.nonzero(top)[0]
        aps.append(float(np.sum(hits[positions] / (positions + 1.0)) / total))
    return float(np.mean(aps))


def mrr(m) -> float:
    """Mean reciprocal rank of each row's diagonal entry within its row.

    rank_i counts every column j with M[i, j] >= M[i, i], including j = i,
    so ties rank pessimistically.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise errors.NotSquare(f"expected square matrix, got {m.shape}")
    diag = np.diagonal(m)
    ranks = np.count_nonzero(m >= diag[:, None], axis=1)
    return float(np.mean(1.0 / ranks))


def cumulative_mrr(history) -> list:
    """Running mean of mrr over a sequence of similarity matrices."""
    if len(history) == 0:
        raise errors.EmptyHistory("no batches to average")
    values = np.array([mrr(m) for m in history])
    return list(np.cumsum(values) / np.arange(1, values.size + 1))


def chamfer_similarity(frame_sim) -> float:
    """Mean over rows of the row-wise maximum (query frames along rows)."""
    frame_sim = np.asarray(frame_sim, dtype=np.float64)
    if frame_sim.size == 0:
        raise errors.EmptyMatrix("frame similarity matrix is empty")
    return float(frame_sim.max(axis=1).mean())


def ensemble_mean_scores(task: RetrievalTask, teacher_embeddings) -> np.ndarray:
    """Average of per-teacher query-gallery cosine scores.

    Each entry of teacher_embeddings is a (queries, gallery) pair of
    unit-norm embedding matrices row-aligned with the task.
    """
    n_q = task.query_embeddings.shape[0]
    n_g = task.gallery_embeddings.shape[0]
    scores = np.zeros((n_q, n_g))
    if len(teacher_embeddings) == 0:
        raise errors.EmptyTeacherList("need at least one teacher")
    for queries, gallery in teacher_embeddings:
        queries = np.asarray(queries, dtype=np.float64)
        gallery = np.asarray(gallery, dtype=np.float64)
        if queries.shape[0] != n_q or gallery.shape[0] != n_g:
            raise errors.ShapeMismatch("teacher embeddings not row-aligned with task")
        _check_unit_rows(queries, "teacher query embeddings")
        _check_unit_rows(gallery, "teacher gallery embeddings")
        scores += queries @ gallery.T
    return scores / len(teacher_embeddings)


SELF_SCORE = -2.0  # below any cosine, so a query never retrieves itself


def holdout_split(labels, per_class: int):
    """Deterministic split: the last per_class items of every class are held out.

    Returns (train_indices, holdout_indices) in ascending row order.
    """
    labels = np.asarray(labels)
    if per_class < 0:
        raise errors.BadConfig("holdout per_class must be >= 0")
    held = np.zeros(labels.shape[0], dtype=bool)
    for lab in np.unique(labels):
        members = np.nonzero(labels == lab)[0]
        if per_class >= members.size:
            raise errors.BadConfig(
                f"holdout of {per_class} would exhaust label {lab} ({members.size} items)"
            )
        if per_class:
            held[members[-per_class:]] = True
    return np.nonzero(~held)[0], np.nonzero(held)[0]


def self_retrieval_relevance(labels):
    """Per-query relevant indices for self-retrieval: same label, self excluded."""
    labels = np.asarray(labels)
    relevance = []
    for i in range(labels.shape[0]):
        rel = np.nonzero(labels == labels[i])[0]
        rel = rel[rel != i]
        if rel.size == 0:
            raise errors.NoRelevant(i)
        relevance.append(rel)
    return relevance


def self_retrieval_task(embeddings, labels):
    """Task where every row queries all the others; same label = relevant.

    The query is excluded from its own gallery by pinning its self-score
    below every possible cosine, which leaves AP identical to physically
    removing it from the ranking.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    _check_unit_rows(embeddings)
    scores = embeddings @ embeddings.T
    np.fill_diagonal(scores, SELF_SCORE)
    task = RetrievalTask(embeddings, embeddings, self_retrieval_relevance(labels))
    return task, scores
