"""Training objectives: reconstruction, hybrid rectification, and the
threshold-gated cross-view contrastive term.

Each loss comes with its analytic gradient so the trainer can assemble a
single backward pass. Per-sample means (rather than sums) keep every term
batch-size invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import DimensionError

LOG_CLAMP = 1e-12        # floor inside log() of predicted probabilities
SIMILARITY_CLAMP = 1e-6  # keeps log(1 - s) finite as s -> 1


@dataclass
class LossBreakdown:
    recon: float
    rectify: float
    contrastive: float
    total: float
    selected_pair_count: int


def total_loss(
    recon: float,
    rectify: float,
    contrastive: float,
    alpha: float,
    beta: float,
    selected_pair_count: int = 0,
) -> LossBreakdown:
    return LossBreakdown(
        recon=float(recon),
        rectify=float(rectify),
        contrastive=float(contrastive),
        total=float(recon + alpha * rectify + beta * contrastive),
        selected_pair_count=int(selected_pair_count),
    )


def mix_predictions(
    predictions: np.ndarray, anchor_predictions: np.ndarray, phi: np.ndarray
) -> np.ndarray:
    """Blend a view's soft predictions with the first view's by clean
    probability: phi keeps the view's own prediction, 1-phi adopts the
    anchor's."""
    y = np.asarray(predictions, dtype=np.float64)
    y1 = np.asarray(anchor_predictions, dtype=np.float64)
    p = np.asarray(phi, dtype=np.float64).reshape(-1)
    if y.shape != y1.shape:
        raise DimensionError(f"prediction shapes differ: {y.shape} vs {y1.shape}")
    if p.shape[0] != y.shape[0]:
        raise DimensionError(f"phi length {p.shape[0]} != batch size {y.shape[0]}")
    if p.min() < 0.0 or p.max() > 1.0:
        raise ValueError("phi entries must lie in [0, 1]")
    return p[:, None] * y + (1.0 - p)[:, None] * y1


def rectification_loss(mixed_targets: list, predictions: list) -> float:
    """Mean cross-entropy from the mixed targets to the non-anchor views'
    predictions, averaged over views and samples."""
    if not mixed_targets:
        raise ValueError("rectification needs at least one non-anchor view")
    if len(mixed_targets) != len(predictions):
        raise DimensionError("need one mixed target per prediction matrix")
    total = 0.0
    for m, y in zip(mixed_targets, predictions):
        m = np.asarray(m, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if m.shape != y.shape:
            raise DimensionError(f"target shape {m.shape} != prediction shape {y.shape}")
        total += -(m * np.log(np.maximum(y, LOG_CLAMP))).sum() / m.shape[0]
    return total / len(mixed_targets)


def rectification_with_grads(predictions: list, phi: list):
    """Rectification loss plus gradients w.r.t. every view's predictions.

    predictions holds all V soft-prediction matrices (anchor first); phi
    holds one clean-probability vector per view (the anchor's is unused).
    The mix is recomputed here so the gradient carries both the direct
    cross-entropy path and the path through the mixed target, which is what
    sharpens confident views and aligns them with the anchor.
    """
    num_views = len(predictions)
    if num_views < 2:
        raise ValueError("rectification needs at least two views")
    y1 = np.asarray(predictions[0], dtype=np.float64)
    batch = y1.shape[0]
    scale = 1.0 / ((num_views - 1) * batch)

    grads = [np.zeros_like(np.asarray(p, dtype=np.float64)) for p in predictions]
    value = 0.0
    for v in range(1, num_views):
        y = np.asarray(predictions[v], dtype=np.float64)
        p = np.asarray(phi[v], dtype=np.float64).reshape(-1, 1)
        m = p * y + (1.0 - p) * y1
        y_safe = np.maximum(y, LOG_CLAMP)
        log_y = np.log(y_safe)
        value += -(m * log_y).sum() * scale
        live = y > LOG_CLAMP
        grads[v] += scale * (-(m / y_safe) * live - p * log_y)
        grads[0] += scale * (-(1.0 - p) * log_y)
    return value, grads


def pair_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1]."""
    return float(np.clip(np.dot(np.ravel(a), np.ravel(b)), -1.0, 1.0))


def contrastive_loss(embeddings: list, predictions: list, tau: float):
    """Threshold-gated attraction between cross-view sample pairs.

    For every ordered view pair and every sample pair (i, j) in the batch
    (i = j included), the pair is selected when the two soft predictions'
    dot product reaches tau; each selected pair contributes
    log(1 - s(z_i, z_j)) + log(1 - s(z_j, z_i)) with similarities clamped
    below 1. The sum is divided by V(V-1) and by the number of selected
    pairs, so minimizing it pulls selected pairs together.

    Returns (value, selected_pair_count, gradients w.r.t. each embedding
    matrix). Gradients flow only through the similarities; the selection is
    a hard gate.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    num_views = len(embeddings)
    zs = [np.asarray(z, dtype=np.float64) for z in embeddings]
    ys = [np.asarray(y, dtype=np.float64) for y in predictions]
    grads = [np.zeros_like(z) for z in zs]
    if num_views < 2:
        return 0.0, 0, grads

    masks = {}
    count = 0
    for m in range(num_views):
        for n in range(num_views):
            if m == n:
                continue
            mask = (ys[m] @ ys[n].T) >= tau
            masks[(m, n)] = mask
            count += int(mask.sum())
    if count == 0:
        return 0.0, 0, grads

    norm = 1.0 / (num_views * (num_views - 1) * count)
    value = 0.0
    for (m, n), mask in masks.items():
        sel = mask.astype(np.float64)
        sims = zs[m] @ zs[n].T
        clamped = np.clip(sims, -1.0, 1.0 - SIMILARITY_CLAMP)
        log_term = np.log1p(-clamped)
        value += (sel * log_term).sum() + (sel * log_term.T).sum()
        # d/ds log(1-s) = -1/(1-s); both orientations of the pair hit sims
        live = (sims < 1.0 - SIMILARITY_CLAMP) & (sims > -1.0)
        weight = -(sel + sel.T) * live / (1.0 - clamped) * norm
        grads[m] += weight @ zs[n]
        grads[n] += weight.T @ zs[m]
    return value * norm, count, grads


def reconstruction_loss(inputs: list, reconstructions: list):
    """Per-view mean squared reconstruction error, summed over views.

    Returns (value, gradients w.r.t. each reconstruction).
    """
    if len(inputs) != len(reconstructions):
        raise DimensionError("need one reconstruction per input view")
    value = 0.0
    grads = []
    for x, xh in zip(inputs, reconstructions):
        x = np.asarray(x, dtype=np.float64)
        xh = np.asarray(xh, dtype=np.float64)
        if x.shape != xh.shape:
            raise DimensionError(
                f"input shape {x.shape} != reconstruction shape {xh.shape}"
            )
        diff = xh - x
        value += (diff * diff).sum() / x.shape[0]
        grads.append(2.0 * diff / x.shape[0])
    return value, grads
