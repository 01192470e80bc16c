"""Flat ``key = value`` experiment configuration.

Files are UTF-8 text, one assignment per line, ``#`` starts a comment.
Every training and noise field is addressable; command-line flags override
file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .trainer import ABLATIONS


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    # data source: a dataset directory, or synthetic blobs when dataset is empty
    dataset: str = ""
    synth_samples: int = 300
    synth_clusters: int = 3
    synth_views: int = 3
    synth_dims: int = 10
    synth_separation: float = 8.0
    synth_seed: int = 0
    # noise injection
    noise_ratio: float = 0.0
    noise_seed: int = -1  # -1: derive from each run's seed
    corrupted_views: str = ""  # comma-separated 1-based indices; empty: views 2..V
    noise_model: str = "gaussian_replace"
    allow_first_view: bool = False
    # training
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
    # experiment protocol
    repeats: int = 10
    out: str = "results"

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if not 0.0 <= self.noise_ratio <= 1.0:
            raise ConfigError(f"noise_ratio must be in [0, 1], got {self.noise_ratio}")
        if self.ablation not in ABLATIONS:
            raise ConfigError(
                f"unknown ablation {self.ablation!r}, expected one of {ABLATIONS}"
            )

    def corrupted_view_set(self):
        if not self.corrupted_views.strip():
            return None
        try:
            return {int(tok) for tok in self.corrupted_views.split(",") if tok.strip()}
        except ValueError:
            raise ConfigError(
                f"corrupted_views must be comma-separated integers, got "
                f"{self.corrupted_views!r}"
            ) from None


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentSpec)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse value {raw!r} for key {key!r}") from None


def parse_config_text(text: str) -> dict:
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r} (line {line_no})")
        values[key] = _coerce(key, raw)
    return values


def load_config(path) -> dict:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def build_spec(file_values: dict | None = None, overrides: dict | None = None) -> ExperimentSpec:
    merged = {}
    merged.update(file_values or {})
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = value
    return ExperimentSpec(**merged)
