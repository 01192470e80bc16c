"""Multi-view dataset handling: loading, synthesis, noise injection, batching.

On-disk dataset layout (one directory per dataset):
    view_1.csv ... view_V.csv   headerless numeric CSV, N rows each
    labels.csv                  optional, one integer class id per row
    meta.txt                    lines ``clusters=<K>`` and ``name=<text>``

Cells are written with repr() so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataFormatError(ValueError):
    """Raised for malformed dataset directories or CSV contents."""


@dataclass
class MultiViewDataset:
    views: list  # list of (N, D_v) float64 arrays
    labels: np.ndarray | None
    num_clusters: int
    name: str = "unnamed"

    def __post_init__(self):
        if len(self.views) < 2:
            raise DataFormatError(
                f"a multi-view dataset needs at least 2 views, got {len(self.views)}"
            )
        self.views = [np.asarray(v, dtype=np.float64) for v in self.views]
        n = self.views[0].shape[0]
        for i, v in enumerate(self.views):
            if v.ndim != 2:
                raise DataFormatError(f"view {i + 1} is not a 2-D matrix")
            if v.shape[0] != n:
                raise DataFormatError(
                    f"view 1 has {n} rows but view {i + 1} has {v.shape[0]}"
                )
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise DataFormatError(
                    f"labels length {self.labels.shape} != sample count {n}"
                )
            if self.labels.size and (
                self.labels.min() < 0 or self.labels.max() >= self.num_clusters
            ):
                raise DataFormatError(
                    f"labels must lie in [0, {self.num_clusters}), got range "
                    f"[{self.labels.min()}, {self.labels.max()}]"
                )
        if self.num_clusters < 1:
            raise DataFormatError("num_clusters must be positive")

    @property
    def num_samples(self) -> int:
        return self.views[0].shape[0]

    @property
    def num_views(self) -> int:
        return len(self.views)


@dataclass
class NoiseSpec:
    """Which views get corrupted, how much, and with what seed.

    View indices are 1-based; the first view is treated as the clean
    reference and is rejected unless allow_first_view is set.
    """

    ratio: float
    seed: int = 0
    corrupted_views: set | None = None  # default: every view except the first
    model: str = "gaussian_replace"
    allow_first_view: bool = False

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"noise ratio must be in [0, 1], got {self.ratio}")
        if self.model != "gaussian_replace":
            raise ValueError(f"unknown noise model {self.model!r}")

    def views_for(self, num_views: int) -> list:
        if self.corrupted_views is None:
            return list(range(2, num_views + 1))
        views = sorted(self.corrupted_views)
        for v in views:
            if not 1 <= v <= num_views:
                raise ValueError(f"corrupted view index {v} outside 1..{num_views}")
        if 1 in views and not self.allow_first_view:
            raise ValueError(
                "view 1 is the clean reference; corrupting it requires "
                "allow_first_view=True"
            )
        return views


@dataclass
class CorruptionMask:
    """Per-view boolean vectors marking which rows were replaced."""

    per_view: list = field(default_factory=list)  # list of (N,) bool arrays

    def corrupted_count(self, view_index: int) -> int:
        return int(self.per_view[view_index].sum())


def _parse_csv_matrix(path: Path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for row_idx, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise DataFormatError(
                    f"{path}: row {row_idx} has {len(cells)} cells, expected {width}"
                )
            parsed = []
            for col_idx, cell in enumerate(cells):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataFormatError(
                        f"{path}: non-numeric cell at row {row_idx}, col {col_idx}: "
                        f"{cell!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DataFormatError(f"{path}: empty matrix")
    return np.array(rows, dtype=np.float64)


def _write_csv_matrix(path: Path, matrix: np.ndarray):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for row in np.asarray(matrix, dtype=np.float64):
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")
    os.replace(tmp, path)


def load_dataset(directory) -> MultiViewDataset:
    """Load ``view_<v>.csv`` matrices plus optional labels and meta."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataFormatError(f"dataset directory {directory} does not exist")
    view_paths = []
    v = 1
    while (directory / f"view_{v}.csv").exists():
        view_paths.append(directory / f"view_{v}.csv")
        v += 1
    if len(view_paths) < 2:
        raise DataFormatError(
            f"{directory}: need view_1.csv and view_2.csv at minimum, "
            f"found {len(view_paths)} view file(s)"
        )
    views = [_parse_csv_matrix(p) for p in view_paths]
    n = views[0].shape[0]
    for p, m in zip(view_paths, views):
        if m.shape[0] != n:
            raise DataFormatError(
                f"row count mismatch: {view_paths[0].name} has {n} rows but "
                f"{p.name} has {m.shape[0]}"
            )

    labels = None
    labels_path = directory / "labels.csv"
    if labels_path.exists():
        raw = _parse_csv_matrix(labels_path)
        if raw.shape[1] != 1:
            raise DataFormatError(f"{labels_path}: expected one integer per row")
        labels = raw[:, 0].astype(np.int64)
        if not np.allclose(raw[:, 0], labels):
            raise DataFormatError(f"{labels_path}: labels must be integers")

    meta = {}
    meta_path = directory / "meta.txt"
    if meta_path.exists():
        for line in meta_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataFormatError(f"{meta_path}: malformed line {line!r}")
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()

    if "clusters" in meta:
        num_clusters = int(meta["clusters"])
    elif labels is not None:
        num_clusters = int(labels.max()) + 1
    else:
        raise DataFormatError(
            f"{directory}: meta.txt must supply clusters=<K> when labels.csv is absent"
        )
    name = meta.get("name", directory.name)
    return MultiViewDataset(views=views, labels=labels, num_clusters=num_clusters, name=name)


def save_dataset(dataset: MultiViewDataset, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, view in enumerate(dataset.views, start=1):
        _write_csv_matrix(directory / f"view_{i}.csv", view)
    if dataset.labels is not None:
        _write_csv_matrix(
            directory / "labels.csv", dataset.labels.astype(np.float64)[:, None]
        )
    tmp = directory / "meta.txt.tmp"
    tmp.write_text(
        f"clusters={dataset.num_clusters}\nname={dataset.name}\n", encoding="utf-8"
    )
    os.replace(tmp, directory / "meta.txt")


def synth_blobs(
    num_samples: int,
    num_clusters: int,
    num_views: int,
    dims_per_view=10,
    separation: float = 8.0,
    seed: int = 0,
    name: str = "synth",
) -> MultiViewDataset:
    """Balanced Gaussian blobs drawn independently per view.

    Cluster centers are standard normal scaled by ``separation``; samples are
    center + unit Gaussian. Cluster sizes differ by at most one sample.
    """
    if num_samples < 1 or num_clusters < 1 or num_views < 2:
        raise ValueError("counts must be positive (and views >= 2)")
    if np.isscalar(dims_per_view):
        dims = [int(dims_per_view)] * num_views
    else:
        dims = [int(d) for d in dims_per_view]
        if len(dims) != num_views:
            raise ValueError("dims_per_view length must equal num_views")

    base = num_samples // num_clusters
    counts = [base + (1 if k < num_samples % num_clusters else 0) for k in range(num_clusters)]
    labels = np.repeat(np.arange(num_clusters), counts)

    rng = np.random.default_rng([seed, num_samples, num_clusters])
    views = []
    for d in dims:
        centers = rng.standard_normal((num_clusters, d)) * separation
        samples = centers[labels] + rng.standard_normal((num_samples, d))
        views.append(samples)
    return MultiViewDataset(views=views, labels=labels, num_clusters=num_clusters, name=name)


def inject_noise(dataset: MultiViewDataset, spec: NoiseSpec):
    """Replace a seeded sample of rows in each corrupted view with Gaussian
    noise matched to that view's per-feature mean and standard deviation.

    Returns (noisy dataset, CorruptionMask). Uncorrupted views (the first
    view under the default spec) are returned bit-identical.
    """
    n = dataset.num_samples
    corrupted = set(spec.views_for(dataset.num_views))
    count = int(np.floor(spec.ratio * n + 0.5))

    new_views = []
    mask = CorruptionMask(per_view=[np.zeros(n, dtype=bool) for _ in dataset.views])
    for idx, view in enumerate(dataset.views, start=1):
        if idx not in corrupted or count == 0:
            new_views.append(view.copy())
            continue
        rng = np.random.default_rng([spec.seed, idx])
        rows = rng.choice(n, size=count, replace=False)
        mean = view.mean(axis=0)
        std = view.std(axis=0)
        noisy = view.copy()
        noisy[rows] = mean + std * rng.standard_normal((count, view.shape[1]))
        mask.per_view[idx - 1][rows] = True
        new_views.append(noisy)
    noisy_dataset = MultiViewDataset(
        views=new_views,
        labels=None if dataset.labels is None else dataset.labels.copy(),
        num_clusters=dataset.num_clusters,
        name=dataset.name,
    )
    return noisy_dataset, mask


def zscore_normalize(dataset: MultiViewDataset) -> MultiViewDataset:
    """Standardize each view's columns to mean 0, std 1 (population std).

    Zero-variance columns are mapped to all zeros.
    """
    views = []
    for view in dataset.views:
        mean = view.mean(axis=0)
        std = view.std(axis=0)
        safe = np.where(std == 0.0, 1.0, std)
        z = (view - mean) / safe
        z[:, std == 0.0] = 0.0
        views.append(z)
    return MultiViewDataset(
        views=views,
        labels=None if dataset.labels is None else dataset.labels.copy(),
        num_clusters=dataset.num_clusters,
        name=dataset.name,
    )


def minibatch_iter(dataset: MultiViewDataset, batch_size: int, seed: int, epoch: int):
    """Yield index batches from a seeded per-epoch permutation of [0, N).

    The final partial batch is kept; the same (seed, epoch) pair always
    produces the same batches.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    n = dataset.num_samples
    rng = np.random.default_rng([seed, epoch, n])
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]
