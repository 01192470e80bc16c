"""Joint training: autoencoder pretraining, then per epoch one E-step
(refit cluster mixtures and clean probabilities with networks frozen)
followed by one M-step epoch of minibatch Adam updates on the full
objective.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import MultiViewDataset, minibatch_iter
from .losses import (
    LossBreakdown,
    contrastive_loss,
    reconstruction_loss,
    rectification_with_grads,
    total_loss,
)
from .networks import ModelBundle, backward_all, forward_all, save_checkpoint
from .noisegmm import (
    clean_probability,
    clean_score,
    cluster_posterior,
    fit_two_component_gmm,
    update_cluster_gmm,
)
from .optim import AdamState, adam_step

ABLATIONS = ("full", "no_dr", "no_con", "no_dr_con")


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    alpha: float = 1.0
    beta: float = 1.0
    tau: float = 0.8
    learning_rate: float = 1e-4
    pretrain_epochs: int = 100
    train_epochs: int = 400
    batch_size: int = 128
    seed: int = 0
    ablation: str = "full"
    hidden_dim: int = 256
    latent_dim: int = 64
    checkpoint_every: int = 50

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.pretrain_epochs < 0 or self.train_epochs < 0:
            raise ValueError("epoch counts must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.ablation not in ABLATIONS:
            raise ValueError(
                f"unknown ablation {self.ablation!r}, expected one of {ABLATIONS}"
            )

    @property
    def rectification_active(self) -> bool:
        return self.ablation in ("full", "no_con")

    @property
    def contrastive_active(self) -> bool:
        return self.ablation in ("full", "no_dr")


@dataclass
class TrainState:
    bundle: ModelBundle
    config: TrainConfig
    gmms: list = field(default_factory=list)    # per view ClusterGmm or None
    gmm2s: list = field(default_factory=list)   # per view CleanGmm2 or None
    scores: list = field(default_factory=list)  # per view clean-score vectors
    phi: list = field(default_factory=list)     # per view clean probabilities
    epoch: int = 0
    adam: dict = field(default_factory=dict)    # (view, name) -> AdamState
    history: list = field(default_factory=list)

    @classmethod
    def create(cls, dataset: MultiViewDataset, config: TrainConfig) -> "TrainState":
        bundle = ModelBundle.create(
            input_dims=[v.shape[1] for v in dataset.views],
            num_clusters=dataset.num_clusters,
            seed=config.seed,
            hidden_dim=config.hidden_dim,
            latent_dim=config.latent_dim,
        )
        state = cls(bundle=bundle, config=config)
        n = dataset.num_samples
        state.gmms = [None] * dataset.num_views
        state.gmm2s = [None] * dataset.num_views
        state.scores = [None] * dataset.num_views
        state.phi = [np.ones(n) for _ in range(dataset.num_views)]
        for vi, model in enumerate(bundle.views):
            for name in sorted(model.params):
                state.adam[(vi, name)] = AdamState.for_parameter(
                    model.params[name], lr=config.learning_rate
                )
        return state

    def step_params(self, autoencoder_only: bool = False):
        for vi, model in enumerate(self.bundle.views):
            for name in sorted(model.params):
                if autoencoder_only and not name.startswith(("enc", "dec")):
                    continue
                adam_step(model.params[name], self.adam[(vi, name)])


def batch_objective(bundle: ModelBundle, xs: list, phi: list, config: TrainConfig):
    """Forward every view and evaluate the full objective on one batch.

    phi holds one clean-probability vector per view, already sliced to the
    batch and frozen for the whole epoch. Returns the loss breakdown, the
    per-view forward caches, and the gradients of each loss term w.r.t. the
    head outputs (before the alpha/beta weighting).
    """
    caches = [forward_all(m, x) for m, x in zip(bundle.views, xs)]
    recon_val, d_recons = reconstruction_loss(xs, [c["recon"] for c in caches])

    rect_val, d_probs = 0.0, None
    if config.rectification_active:
        rect_val, d_probs = rectification_with_grads(
            [c["probs"] for c in caches], phi
        )

    con_val, pair_count, d_embs = 0.0, 0, None
    if config.contrastive_active:
        con_val, pair_count, d_embs = contrastive_loss(
            [c["embedding"] for c in caches], [c["probs"] for c in caches], config.tau
        )

    breakdown = total_loss(
        recon_val, rect_val, con_val, config.alpha, config.beta, pair_count
    )
    return breakdown, caches, d_recons, d_probs, d_embs


def apply_backward(bundle, caches, d_recons, d_probs, d_embs, alpha, beta):
    """Zero gradients, then accumulate all loss paths through every view."""
    bundle.zero_grads()
    for v, (model, cache) in enumerate(zip(bundle.views, caches)):
        backward_all(
            model,
            cache,
            d_recon=d_recons[v],
            d_embedding=None if d_embs is None else beta * d_embs[v],
            d_probs=None if d_probs is None else alpha * d_probs[v],
        )


def pretrain(dataset: MultiViewDataset, config: TrainConfig) -> TrainState:
    """Reconstruction-only warmup. Projector and classifier parameters stay
    at their initialization."""
    state = TrainState.create(dataset, config)
    for _ in range(config.pretrain_epochs):
        batch_losses = []
        for batch in minibatch_iter(dataset, config.batch_size, config.seed, state.epoch):
            xs = [view[batch] for view in dataset.views]
            caches = [
                forward_all(m, x, heads=("recon",))
                for m, x in zip(state.bundle.views, xs)
            ]
            recon_val, d_recons = reconstruction_loss(xs, [c["recon"] for c in caches])
            if not np.isfinite(recon_val):
                raise TrainingDiverged(
                    f"pretrain epoch {state.epoch}: non-finite reconstruction "
                    f"loss {recon_val}"
                )
            state.bundle.zero_grads()
            for model, cache, d in zip(state.bundle.views, caches, d_recons):
                backward_all(model, cache, d_recon=d)
            state.step_params(autoencoder_only=True)
            batch_losses.append(recon_val)
        state.history.append(
            {
                "phase": "pretrain",
                "epoch": state.epoch,
                "recon": float(np.mean(batch_losses)),
                "rectify": 0.0,
                "contrastive": 0.0,
                "total": float(np.mean(batch_losses)),
                "selected_pairs": 0,
                "mean_phi": [1.0] * dataset.num_views,
            }
        )
        state.epoch += 1
    return state


def e_step(state: TrainState, dataset: MultiViewDataset) -> TrainState:
    """Refresh per-view cluster mixtures, clean scores, and phi with the
    networks frozen. A no-op (phi all ones) when identification is ablated."""
    config = state.config
    if not config.rectification_active:
        state.phi = [np.ones(dataset.num_samples) for _ in dataset.views]
        return state
    for v, (model, x) in enumerate(zip(state.bundle.views, dataset.views)):
        cache = forward_all(model, x, heads=("embedding", "probs"))
        z, y = cache["embedding"], cache["probs"]
        gmm = update_cluster_gmm(
            z,
            y,
            dataset.num_clusters,
            previous=state.gmms[v],
            seed=config.seed + v,
        )
        posterior = cluster_posterior(z, gmm)
        scores = clean_score(posterior, y)
        gmm2 = fit_two_component_gmm(scores)
        state.gmms[v] = gmm
        state.gmm2s[v] = gmm2
        state.scores[v] = scores
        state.phi[v] = clean_probability(scores, gmm2)
    return state


def m_step_epoch(state: TrainState, dataset: MultiViewDataset) -> TrainState:
    """One epoch of minibatch gradient descent with phi held fixed."""
    config = state.config
    sums = {"recon": 0.0, "rectify": 0.0, "contrastive": 0.0, "total": 0.0}
    pair_total = 0
    batches = 0
    for batch in minibatch_iter(dataset, config.batch_size, config.seed, state.epoch):
        xs = [view[batch] for view in dataset.views]
        phi = [p[batch] for p in state.phi]
        breakdown, caches, d_recons, d_probs, d_embs = batch_objective(
            state.bundle, xs, phi, config
        )
        if not np.isfinite(breakdown.total):
            raise TrainingDiverged(
                f"epoch {state.epoch} batch {batches}: non-finite loss "
                f"(recon={breakdown.recon}, rectify={breakdown.rectify}, "
                f"contrastive={breakdown.contrastive})"
            )
        apply_backward(
            state.bundle, caches, d_recons, d_probs, d_embs, config.alpha, config.beta
        )
        state.step_params()
        sums["recon"] += breakdown.recon
        sums["rectify"] += breakdown.rectify
        sums["contrastive"] += breakdown.contrastive
        sums["total"] += breakdown.total
        pair_total += breakdown.selected_pair_count
        batches += 1
    state.history.append(
        {
            "phase": "train",
            "epoch": state.epoch,
            "recon": sums["recon"] / batches,
            "rectify": sums["rectify"] / batches,
            "contrastive": sums["contrastive"] / batches,
            "total": sums["total"] / batches,
            "selected_pairs": pair_total,
            "mean_phi": [float(np.mean(p)) for p in state.phi],
        }
    )
    state.epoch += 1
    return state


def train(dataset: MultiViewDataset, config: TrainConfig, out_dir=None):
    """Full schedule: pretrain, then alternate E-steps and M-step epochs.
    Returns (state, ClusterResult, MetricsReport or None).

    Checkpoints are written to out_dir every config.checkpoint_every
    training epochs (plus a final one) when out_dir is given.
    """
    from .evaluate import assign_clusters, score_result

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    state = pretrain(dataset, config)
    for t in range(config.train_epochs):
        e_step(state, dataset)
        m_step_epoch(state, dataset)
        if (
            out_dir is not None
            and config.checkpoint_every > 0
            and (t + 1) % config.checkpoint_every == 0
        ):
            save_checkpoint(state.bundle, out_dir / f"checkpoint_epoch{t + 1:04d}.bin")
    if out_dir is not None:
        save_checkpoint(state.bundle, out_dir / "checkpoint_final.bin")

    result = assign_clusters(state, dataset)
    report = None
    if dataset.labels is not None:
        report = score_result(result, dataset)
    return state, result, report


def write_train_log(state: TrainState, path):
    """One tab-separated line per epoch: epoch, losses, pair count, and the
    per-view mean clean probability."""
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for row in state.history:
            phis = "\t".join(repr(p) for p in row["mean_phi"])
            fh.write(
                f"{row['epoch']}\t{repr(row['recon'])}\t{repr(row['rectify'])}\t"
                f"{repr(row['contrastive'])}\t{repr(row['total'])}\t"
                f"{row['selected_pairs']}\t{phis}\n"
            )
    os.replace(tmp, path)
