"""Noisy-sample identification.

Per view, a soft-prediction-weighted Gaussian mixture over the unit
embeddings yields a posterior over clusters; the posterior evaluated at each
sample's predicted class is its clean score. A two-component 1-D Gaussian
mixture fit to the scores separates a clean (higher-mean) population from a
noisy one, and the posterior of the clean component is the per-sample clean
probability phi.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .layers import DimensionError, softmax_rows

SIGMA_FLOOR = 1e-4        # cluster variance floor
VAR_FLOOR = 1e-6          # two-component fit variance floor
DEGENERATE_RANGE = 1e-9   # score range below which the 1-D fit is meaningless
POSTERIOR_FLOOR = 1e-300  # keeps posteriors strictly positive after underflow


@dataclass
class ClusterGmm:
    means: np.ndarray      # (K, d), unit rows
    variances: np.ndarray  # (K,), >= SIGMA_FLOOR


def update_cluster_gmm(
    embeddings: np.ndarray,
    predictions: np.ndarray,
    num_clusters: int,
    previous: ClusterGmm | None = None,
    seed: int = 0,
) -> ClusterGmm:
    """Refit cluster means/variances from soft-prediction weights.

    Means are the L2-normalized prediction-weighted averages of the unit
    embeddings; variances are the weighted mean squared distance to the mean
    divided by the embedding dimension (a scalar per cluster), floored at
    SIGMA_FLOOR. Clusters with negligible total weight keep their previous
    mean (a seeded random unit vector when there is none) and get the floor
    variance.
    """
    z = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(predictions, dtype=np.float64)
    if y.shape[1] != num_clusters:
        raise DimensionError(
            f"predictions have {y.shape[1]} columns, expected {num_clusters}"
        )
    if z.shape[0] != y.shape[0]:
        raise DimensionError(
            f"embeddings have {z.shape[0]} rows, predictions {y.shape[0]}"
        )
    dim = z.shape[1]
    weights = y.sum(axis=0)  # (K,)
    means = np.zeros((num_clusters, dim))
    variances = np.full(num_clusters, SIGMA_FLOOR)
    for k in range(num_clusters):
        mean_norm = 0.0
        if weights[k] >= 1e-8:
            raw = y[:, k] @ z / weights[k]
            mean_norm = float(np.linalg.norm(raw))
        if weights[k] < 1e-8 or mean_norm < 1e-12:
            if previous is not None:
                means[k] = previous.means[k]
            else:
                rng = np.random.default_rng([seed, k])
                vec = rng.standard_normal(dim)
                means[k] = vec / np.linalg.norm(vec)
            variances[k] = SIGMA_FLOOR
            continue
        means[k] = raw / mean_norm
        sq_dist = ((z - means[k]) ** 2).sum(axis=1)
        variances[k] = max(float(y[:, k] @ sq_dist / (weights[k] * dim)), SIGMA_FLOOR)
    return ClusterGmm(means=means, variances=variances)


def cluster_posterior(embeddings: np.ndarray, gmm: ClusterGmm) -> np.ndarray:
    """Row-softmax of embedding-mean affinities scaled by cluster variance.

    Entries are nudged into the open interval (0, 1) so downstream log and
    score computations never see an exact 0 or 1 after underflow.
    """
    z = np.asarray(embeddings, dtype=np.float64)
    logits = (z @ gmm.means.T) / gmm.variances[None, :]
    post = softmax_rows(logits)
    return np.clip(post, POSTERIOR_FLOOR, np.nextafter(1.0, 0.0))


def clean_score(posterior: np.ndarray, predictions: np.ndarray) -> np.ndarray:
    """Posterior probability at each sample's predicted class.

    Ties in the prediction argmax break toward the lowest class index.
    """
    post = np.asarray(posterior, dtype=np.float64)
    y = np.asarray(predictions, dtype=np.float64)
    if post.shape != y.shape:
        raise DimensionError(
            f"posterior shape {post.shape} != predictions shape {y.shape}"
        )
    predicted = np.argmax(y, axis=1)
    return post[np.arange(post.shape[0]), predicted]


@dataclass
class CleanGmm2:
    """Two-component 1-D Gaussian mixture over clean scores.

    Component 1 is the higher-mean (clean) component. When the scores carry
    no spread the fit is flagged degenerate and callers treat every sample
    as clean.
    """

    mean_noisy: float = 0.0
    mean_clean: float = 0.0
    var_noisy: float = VAR_FLOOR
    var_clean: float = VAR_FLOOR
    weight_noisy: float = 0.5
    weight_clean: float = 0.5
    degenerate: bool = False


def _log_normal_pdf(x: np.ndarray, mean: float, var: float) -> np.ndarray:
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def fit_two_component_gmm(
    scores: np.ndarray, max_iters: int = 100, tol: float = 1e-6
) -> CleanGmm2:
    """EM fit of a two-component 1-D Gaussian mixture.

    Means start at the 10th/90th percentiles, both variances at the overall
    variance, weights at 0.5 each; iteration stops when the log-likelihood
    improves by less than tol. Variances are floored at VAR_FLOOR and the
    higher-mean component is labeled clean.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if s.size < 2:
        raise ValueError(f"need at least 2 scores to fit, got {s.size}")
    if float(s.max() - s.min()) < DEGENERATE_RANGE:
        return CleanGmm2(degenerate=True)

    means = np.array([np.percentile(s, 10.0), np.percentile(s, 90.0)])
    variances = np.full(2, max(float(s.var()), VAR_FLOOR))
    weights = np.array([0.5, 0.5])

    prev_ll = -np.inf
    for _ in range(max_iters):
        log_joint = np.stack(
            [
                np.log(weights[c]) + _log_normal_pdf(s, means[c], variances[c])
                for c in range(2)
            ],
            axis=1,
        )
        shift = log_joint.max(axis=1, keepdims=True)
        joint = np.exp(log_joint - shift)
        total = joint.sum(axis=1, keepdims=True)
        resp = joint / total
        ll = float((np.log(total[:, 0]) + shift[:, 0]).sum())

        mass = resp.sum(axis=0)
        for c in range(2):
            if mass[c] < 1e-12:
                continue  # vanished component keeps its parameters
            means[c] = float(resp[:, c] @ s / mass[c])
            variances[c] = max(
                float(resp[:, c] @ (s - means[c]) ** 2 / mass[c]), VAR_FLOOR
            )
        weights = np.maximum(mass / s.size, 1e-12)
        weights = weights / weights.sum()

        if abs(ll - prev_ll) < tol:
            break
        prev_ll = ll

    order = np.argsort(means)  # clean = higher mean, regardless of init order
    lo, hi = order[0], order[1]
    return CleanGmm2(
        mean_noisy=float(means[lo]),
        mean_clean=float(means[hi]),
        var_noisy=float(variances[lo]),
        var_clean=float(variances[hi]),
        weight_noisy=float(weights[lo]),
        weight_clean=float(weights[hi]),
    )


def clean_probability(scores: np.ndarray, gmm2: CleanGmm2) -> np.ndarray:
    """Posterior responsibility of the clean component at each score.

    A degenerate fit returns all ones (everything treated as clean).
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if gmm2.degenerate:
        return np.ones_like(s)
    log_noisy = np.log(gmm2.weight_noisy) + _log_normal_pdf(
        s, gmm2.mean_noisy, gmm2.var_noisy
    )
    log_clean = np.log(gmm2.weight_clean) + _log_normal_pdf(
        s, gmm2.mean_clean, gmm2.var_clean
    )
    shift = np.maximum(log_noisy, log_clean)
    num = np.exp(log_clean - shift)
    return num / (num + np.exp(log_noisy - shift))


def dump_diagnostics(path, scores: np.ndarray, phi: np.ndarray, corrupted=None):
    """Write per-sample (index, clean score, phi, corrupted flag) as CSV."""
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("index,score,phi,corrupted\n")
        for i in range(len(scores)):
            flag = "" if corrupted is None else int(bool(corrupted[i]))
            fh.write(f"{i},{repr(float(scores[i]))},{repr(float(phi[i]))},{flag}\n")
    os.replace(tmp, path)
