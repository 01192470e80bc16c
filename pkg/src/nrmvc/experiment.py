"""Experiment orchestration: repeated seeded runs, noise sweeps, ablation
comparisons, and their CSV/markdown outputs.

Every output file is written via a temp file and an atomic rename, so an
interrupted invocation never leaves truncated results behind.
"""

from __future__ import annotations

import os
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentSpec
from .data import (
    MultiViewDataset,
    NoiseSpec,
    inject_noise,
    load_dataset,
    synth_blobs,
    zscore_normalize,
)
from .evaluate import MetricsReport
from .networks import forward_all
from .noisegmm import dump_diagnostics
from .trainer import TrainConfig, train, write_train_log

RUNS_HEADER = "dataset,noise_ratio,seed,ablation,acc,nmi,pur"
SUMMARY_HEADER = (
    "dataset,noise_ratio,seed,ablation,repeats,"
    "acc_mean,acc_std,nmi_mean,nmi_std,pur_mean,pur_std"
)


class RunFailure(RuntimeError):
    def __init__(self, noise_ratio: float, seed: int, cause: Exception):
        super().__init__(f"(ratio={noise_ratio}, seed={seed}): {cause}")
        self.noise_ratio = noise_ratio
        self.seed = seed
        self.cause = cause


def atomic_write_text(path, text: str):
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def train_config_from_spec(spec: ExperimentSpec) -> TrainConfig:
    return TrainConfig(
        alpha=spec.alpha,
        beta=spec.beta,
        tau=spec.tau,
        learning_rate=spec.learning_rate,
        pretrain_epochs=spec.pretrain_epochs,
        train_epochs=spec.train_epochs,
        batch_size=spec.batch_size,
        seed=spec.seed,
        ablation=spec.ablation,
        hidden_dim=spec.hidden_dim,
        latent_dim=spec.latent_dim,
        checkpoint_every=spec.checkpoint_every,
    )


def base_dataset_from_spec(spec: ExperimentSpec) -> MultiViewDataset:
    if spec.dataset:
        return load_dataset(spec.dataset)
    return synth_blobs(
        num_samples=spec.synth_samples,
        num_clusters=spec.synth_clusters,
        num_views=spec.synth_views,
        dims_per_view=spec.synth_dims,
        separation=spec.synth_separation,
        seed=spec.synth_seed,
        name=f"synth_n{spec.synth_samples}_k{spec.synth_clusters}",
    )


def prepare_run_data(spec: ExperimentSpec, base: MultiViewDataset, run_seed: int):
    """Inject noise (seeded per run unless pinned) and z-score per view."""
    noise_seed = spec.noise_seed if spec.noise_seed >= 0 else run_seed
    noise = NoiseSpec(
        ratio=spec.noise_ratio,
        seed=noise_seed,
        corrupted_views=spec.corrupted_view_set(),
        model=spec.noise_model,
        allow_first_view=spec.allow_first_view,
    )
    noisy, mask = inject_noise(base, noise)
    return zscore_normalize(noisy), mask


def execute_single_run(spec: ExperimentSpec, base: MultiViewDataset, run_seed: int, run_dir: Path):
    data, mask = prepare_run_data(spec, base, run_seed)
    config = replace(train_config_from_spec(spec), seed=run_seed)
    state, result, report = train(data, config, out_dir=run_dir)
    if report is None:
        report = MetricsReport(acc=float("nan"), nmi=float("nan"), pur=float("nan"))
    report.seed = run_seed
    report.noise_ratio = spec.noise_ratio
    report.dataset = base.name
    report.ablation = spec.ablation

    write_train_log(state, run_dir / "train.log")
    for v, (model, view) in enumerate(zip(state.bundle.views, data.views), start=1):
        cache = forward_all(model, view, heads=("embedding",))
        rows = "\n".join(
            ",".join(repr(float(x)) for x in row) for row in cache["embedding"]
        )
        atomic_write_text(run_dir / f"embeddings_view{v}.csv", rows + "\n")
        scores = state.scores[v - 1]
        if scores is None:
            scores = np.full(data.num_samples, np.nan)
        dump_diagnostics(
            run_dir / f"phi_view{v}.csv",
            scores,
            state.phi[v - 1],
            corrupted=mask.per_view[v - 1],
        )
    return report


def run_experiment(spec: ExperimentSpec, out_dir=None):
    """Execute spec.repeats runs with seeds seed, seed+1, ... and write
    runs.csv plus a mean/std summary. Returns (reports, failures)."""
    out = Path(out_dir if out_dir is not None else spec.out)
    out.mkdir(parents=True, exist_ok=True)
    base = base_dataset_from_spec(spec)

    reports = []
    failures = []
    for r in range(spec.repeats):
        run_seed = spec.seed + r
        run_dir = out / f"run_seed{run_seed:04d}"
        run_dir.mkdir(parents=True, exist_ok=True)
        try:
            reports.append(execute_single_run(spec, base, run_seed, run_dir))
        except Exception as exc:  # partial results stay on disk
            failures.append(RunFailure(spec.noise_ratio, run_seed, exc))

    atomic_write_text(
        out / "runs.csv",
        "\n".join([RUNS_HEADER] + [rep.csv_row() for rep in reports]) + "\n",
    )
    if reports:
        atomic_write_text(out / "summary.csv", summarize(spec, base.name, reports))
    return reports, failures


def summarize(spec: ExperimentSpec, dataset_name: str, reports: list) -> str:
    accs = np.array([r.acc for r in reports])
    nmis = np.array([r.nmi for r in reports])
    purs = np.array([r.pur for r in reports])
    row = (
        f"{dataset_name},{repr(float(spec.noise_ratio))},{spec.seed},{spec.ablation},"
        f"{len(reports)},"
        f"{repr(float(accs.mean()))},{repr(float(accs.std()))},"
        f"{repr(float(nmis.mean()))},{repr(float(nmis.std()))},"
        f"{repr(float(purs.mean()))},{repr(float(purs.std()))}"
    )
    return SUMMARY_HEADER + "\n" + row + "\n"


def _mean_std_cell(values) -> str:
    arr = np.array(values, dtype=np.float64)
    return f"{arr.mean():.4f} ± {arr.std():.4f}"


def run_sweep(spec: ExperimentSpec, ratios: list):
    """One full experiment per noise ratio; emits table.md over the ratios."""
    for ratio in ratios:
        if not 0.0 <= ratio <= 1.0:
            raise ValueError(f"sweep ratio {ratio} outside [0, 1]")
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    all_failures = []
    rows = []
    for ratio in ratios:
        sub = replace(spec, noise_ratio=ratio, out=str(out / f"ratio_{ratio:g}"))
        reports, failures = run_experiment(sub)
        all_failures.extend(failures)
        if reports:
            rows.append(
                f"| {ratio:g} | {_mean_std_cell([r.acc for r in reports])} "
                f"| {_mean_std_cell([r.nmi for r in reports])} "
                f"| {_mean_std_cell([r.pur for r in reports])} |"
            )
        else:
            rows.append(f"| {ratio:g} | - | - | - |")
    table = "\n".join(
        ["| noise ratio | ACC | NMI | PUR |", "| --- | --- | --- | --- |"] + rows
    )
    atomic_write_text(out / "table.md", table + "\n")
    return table, all_failures


def run_ablate(spec: ExperimentSpec):
    """Run full, no_dr, no_con, and no_dr_con under identical seeds."""
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    all_failures = []
    rows = []
    for tag in ("full", "no_dr", "no_con", "no_dr_con"):
        sub = replace(spec, ablation=tag, out=str(out / tag))
        reports, failures = run_experiment(sub)
        all_failures.extend(failures)
        if reports:
            rows.append(
                f"| {tag} | {_mean_std_cell([r.acc for r in reports])} "
                f"| {_mean_std_cell([r.nmi for r in reports])} "
                f"| {_mean_std_cell([r.pur for r in reports])} |"
            )
        else:
            rows.append(f"| {tag} | - | - | - |")
    table = "\n".join(
        ["| variant | ACC | NMI | PUR |", "| --- | --- | --- | --- |"] + rows
    )
    atomic_write_text(out / "table.md", table + "\n")
    return table, all_failures
