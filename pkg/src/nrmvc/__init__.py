"""Noise-robust deep multi-view clustering.

Per-view autoencoders feed a soft-prediction-driven Gaussian mixture that
flags noisy samples, a hybrid rectification loss that corrects them against
the clean first view, and a confidence-gated cross-view contrastive loss,
trained jointly on an alternating E/M schedule.
"""

__version__ = "0.1.0"

from .data import (
    CorruptionMask,
    MultiViewDataset,
    NoiseSpec,
    inject_noise,
    load_dataset,
    minibatch_iter,
    save_dataset,
    synth_blobs,
    zscore_normalize,
)
from .evaluate import (
    ClusterResult,
    MetricsReport,
    assign_clusters,
    auroc,
    brute_force_accuracy,
    clustering_accuracy,
    hungarian,
    nmi,
    purity,
)
from .trainer import TrainConfig, TrainState, train

__all__ = [
    "CorruptionMask",
    "MultiViewDataset",
    "NoiseSpec",
    "inject_noise",
    "load_dataset",
    "minibatch_iter",
    "save_dataset",
    "synth_blobs",
    "zscore_normalize",
    "ClusterResult",
    "MetricsReport",
    "assign_clusters",
    "auroc",
    "brute_force_accuracy",
    "clustering_accuracy",
    "hungarian",
    "nmi",
    "purity",
    "TrainConfig",
    "TrainState",
    "train",
]
