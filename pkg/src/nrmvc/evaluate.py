"""Cluster assignment and evaluation metrics.

Clustering accuracy maps predicted cluster ids to classes with the
Hungarian algorithm on the negated contingency table; NMI normalizes
mutual information by the arithmetic mean of the two label entropies;
purity averages each predicted cluster's majority class fraction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .networks import forward_all


@dataclass
class ClusterResult:
    assignments: np.ndarray   # (N,) cluster ids
    fused_soft: np.ndarray    # (N, K) probability rows
    per_view_soft: list       # V matrices of (N, K)


@dataclass
class MetricsReport:
    acc: float
    nmi: float
    pur: float
    seed: int = 0
    noise_ratio: float = 0.0
    dataset: str = ""
    ablation: str = "full"

    def csv_row(self) -> str:
        return (
            f"{self.dataset},{repr(float(self.noise_ratio))},{self.seed},"
            f"{self.ablation},{repr(float(self.acc))},{repr(float(self.nmi))},"
            f"{repr(float(self.pur))}"
        )


def fuse_soft_predictions(per_view_soft: list, phi: list | None = None) -> np.ndarray:
    """Mean of the per-view soft predictions; with phi given, a per-sample
    clean-probability weighted mean instead."""
    stack = np.stack([np.asarray(p, dtype=np.float64) for p in per_view_soft])
    if phi is None:
        return stack.mean(axis=0)
    w = np.stack([np.asarray(p, dtype=np.float64) for p in phi])  # (V, N)
    w = w / np.maximum(w.sum(axis=0, keepdims=True), 1e-12)
    return (stack * w[:, :, None]).sum(axis=0)


def assign_clusters(state, dataset, phi_weighted: bool = False) -> ClusterResult:
    """Fused-argmax clustering from the trained classifier heads.

    Ties in the fused argmax break toward the lowest cluster index.
    """
    bundle = getattr(state, "bundle", state)
    per_view = [
        forward_all(model, view, heads=("probs",))["probs"]
        for model, view in zip(bundle.views, dataset.views)
    ]
    phi = getattr(state, "phi", None) if phi_weighted else None
    fused = fuse_soft_predictions(per_view, phi)
    return ClusterResult(
        assignments=np.argmax(fused, axis=1),
        fused_soft=fused,
        per_view_soft=per_view,
    )


def score_result(result: ClusterResult, dataset) -> MetricsReport:
    return MetricsReport(
        acc=clustering_accuracy(result.assignments, dataset.labels, dataset.num_clusters),
        nmi=nmi(result.assignments, dataset.labels),
        pur=purity(result.assignments, dataset.labels),
        dataset=dataset.name,
    )


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost assignment; returns perm with row i matched to perm[i]."""
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {c.shape}")
    if not np.isfinite(c).all():
        raise ValueError("cost matrix entries must be finite")
    rows, cols = linear_sum_assignment(c)
    perm = np.empty(c.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm


def _contingency(pred, truth, k: int) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError(f"label lengths differ: {pred.shape} vs {truth.shape}")
    table = np.zeros((k, k), dtype=np.int64)
    np.add.at(table, (pred, truth), 1)
    return table


def clustering_accuracy(pred, truth, num_clusters: int) -> float:
    """Best label-mapping accuracy over all cluster-to-class assignments."""
    table = _contingency(pred, truth, num_clusters)
    perm = hungarian(-table.astype(np.float64))
    matched = table[np.arange(num_clusters), perm].sum()
    return float(matched) / len(np.asarray(pred))


def brute_force_accuracy(pred, truth, num_clusters: int) -> float:
    """Accuracy maximized by enumerating every label permutation (k <= 6)."""
    if num_clusters > 6:
        raise ValueError(f"brute force enumeration limited to k <= 6, got {num_clusters}")
    table = _contingency(pred, truth, num_clusters)
    best = max(
        sum(table[i, perm[i]] for i in range(num_clusters))
        for perm in itertools.permutations(range(num_clusters))
    )
    return float(best) / len(np.asarray(pred))


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth) -> float:
    """Mutual information normalized by the arithmetic mean of entropies.

    Identical partitions (up to relabeling) score 1; when either side has
    zero entropy without the partitions being identical, the score is 0.
    """
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError(f"label lengths differ: {pred.shape} vs {truth.shape}")
    n = pred.size
    k = int(max(pred.max(), truth.max())) + 1
    table = _contingency(pred, truth, k)
    row = table.sum(axis=1)
    col = table.sum(axis=0)
    # identical as set partitions: exactly one nonzero cell per used row/col
    used = table[row > 0][:, col > 0]
    if ((used > 0).sum(axis=1) == 1).all() and ((used > 0).sum(axis=0) == 1).all():
        return 1.0
    h_pred, h_truth = _entropy(row), _entropy(col)
    if h_pred == 0.0 or h_truth == 0.0:
        return 0.0
    mi = 0.0
    for i in range(k):
        for j in range(k):
            if table[i, j] == 0:
                continue
            p_ij = table[i, j] / n
            mi += p_ij * np.log(p_ij * n * n / (row[i] * col[j]))
    return float(mi / ((h_pred + h_truth) / 2.0))


def purity(pred, truth) -> float:
    """Average majority true-class fraction over predicted clusters."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError(f"label lengths differ: {pred.shape} vs {truth.shape}")
    k = int(max(pred.max(), truth.max())) + 1
    table = _contingency(pred, truth, k)
    return float(table.max(axis=1).sum()) / pred.size


def auroc(score: np.ndarray, positive: np.ndarray) -> float:
    """Rank-based area under the ROC curve (ties share average rank)."""
    score = np.asarray(score, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs both positive and negative samples")
    order = np.argsort(score, kind="mergesort")
    ranks = np.empty(score.size, dtype=np.float64)
    ranks[order] = np.arange(1, score.size + 1)
    # average ranks within tied groups
    sorted_scores = score[order]
    i = 0
    while i < score.size:
        j = i
        while j + 1 < score.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i : j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    rank_sum = ranks[positive].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
