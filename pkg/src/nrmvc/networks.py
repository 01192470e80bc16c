"""Per-view network heads: encoder, mirror decoder, projector, classifier.

Each view owns an independent parameter set. The encoder maps D_v -> hidden
-> latent with a ReLU hidden layer; the decoder mirrors it back; the
projector is one affine layer followed by row L2 normalization (unit
embeddings feed both the cluster mixture and the cross-view similarities);
the classifier is one affine layer with a row softmax.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .layers import (
    DimensionError,
    Parameter,
    affine_backward,
    affine_forward,
    glorot_uniform,
    l2_normalize_rows,
    l2_normalize_rows_backward,
    relu_backward,
    relu_forward,
    softmax_rows,
    softmax_rows_backward,
)

CHECKPOINT_MAGIC = b"NRMV"
CHECKPOINT_VERSION = 1

# stable per-layer ids so weight init draws are independent of build order
_LAYER_IDS = {
    "enc1_w": 0, "enc1_b": 1, "enc2_w": 2, "enc2_b": 3,
    "dec1_w": 4, "dec1_b": 5, "dec2_w": 6, "dec2_b": 7,
    "proj_w": 8, "proj_b": 9, "clf_w": 10, "clf_b": 11,
}


@dataclass
class ViewModel:
    input_dim: int
    hidden_dim: int
    latent_dim: int
    num_clusters: int
    params: dict = field(default_factory=dict)  # name -> Parameter

    @classmethod
    def create(
        cls,
        input_dim: int,
        num_clusters: int,
        seed: int,
        view_index: int,
        hidden_dim: int = 256,
        latent_dim: int = 64,
    ) -> "ViewModel":
        shapes = {
            "enc1_w": (input_dim, hidden_dim),
            "enc1_b": (1, hidden_dim),
            "enc2_w": (hidden_dim, latent_dim),
            "enc2_b": (1, latent_dim),
            "dec1_w": (latent_dim, hidden_dim),
            "dec1_b": (1, hidden_dim),
            "dec2_w": (hidden_dim, input_dim),
            "dec2_b": (1, input_dim),
            "proj_w": (latent_dim, latent_dim),
            "proj_b": (1, latent_dim),
            "clf_w": (latent_dim, num_clusters),
            "clf_b": (1, num_clusters),
        }
        params = {}
        for name, (rows, cols) in shapes.items():
            if name.endswith("_b"):
                params[name] = Parameter(np.zeros((rows, cols)))
            else:
                rng = np.random.default_rng([seed, view_index, _LAYER_IDS[name]])
                params[name] = Parameter(glorot_uniform(rows, cols, rng))
        return cls(
            input_dim=input_dim,
            hidden_dim=hidden_dim,
            latent_dim=latent_dim,
            num_clusters=num_clusters,
            params=params,
        )

    def parameters(self):
        return [self.params[name] for name in sorted(self.params)]

    def zero_grads(self):
        for p in self.params.values():
            p.zero_grad()

    def p(self, name: str) -> Parameter:
        return self.params[name]


def encode(model: ViewModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1] != model.input_dim:
        raise DimensionError(
            f"encode: input has {x.shape[1]} features, model expects {model.input_dim}"
        )
    h = relu_forward(affine_forward(x, model.p("enc1_w"), model.p("enc1_b")))
    return affine_forward(h, model.p("enc2_w"), model.p("enc2_b"))


def project(model: ViewModel, latent: np.ndarray) -> np.ndarray:
    u = affine_forward(latent, model.p("proj_w"), model.p("proj_b"))
    z, _, _ = l2_normalize_rows(u)
    return z


def decode(model: ViewModel, latent: np.ndarray) -> np.ndarray:
    h = relu_forward(affine_forward(latent, model.p("dec1_w"), model.p("dec1_b")))
    return affine_forward(h, model.p("dec2_w"), model.p("dec2_b"))


def classify(model: ViewModel, latent: np.ndarray) -> np.ndarray:
    return softmax_rows(affine_forward(latent, model.p("clf_w"), model.p("clf_b")))


def forward_all(
    model: ViewModel, x: np.ndarray, heads=("recon", "embedding", "probs")
) -> dict:
    """Run the requested heads once, keeping the intermediates needed for
    backward."""
    x = np.asarray(x, dtype=np.float64)
    cache = {"x": x}
    cache["enc_a"] = affine_forward(x, model.p("enc1_w"), model.p("enc1_b"))
    cache["enc_h"] = relu_forward(cache["enc_a"])
    cache["latent"] = affine_forward(cache["enc_h"], model.p("enc2_w"), model.p("enc2_b"))

    if "recon" in heads:
        cache["dec_a"] = affine_forward(cache["latent"], model.p("dec1_w"), model.p("dec1_b"))
        cache["dec_h"] = relu_forward(cache["dec_a"])
        cache["recon"] = affine_forward(cache["dec_h"], model.p("dec2_w"), model.p("dec2_b"))

    if "embedding" in heads:
        cache["proj_u"] = affine_forward(cache["latent"], model.p("proj_w"), model.p("proj_b"))
        z, norms, degenerate = l2_normalize_rows(cache["proj_u"])
        cache["embedding"] = z
        cache["proj_norms"] = norms
        cache["degenerate_rows"] = degenerate

    if "probs" in heads:
        cache["logits"] = affine_forward(cache["latent"], model.p("clf_w"), model.p("clf_b"))
        cache["probs"] = softmax_rows(cache["logits"])
    return cache


def backward_all(
    model: ViewModel,
    cache: dict,
    d_recon: np.ndarray | None = None,
    d_embedding: np.ndarray | None = None,
    d_probs: np.ndarray | None = None,
):
    """Accumulate gradients for any subset of head outputs."""
    d_latent = np.zeros_like(cache["latent"])

    if d_recon is not None:
        d_dec_h = affine_backward(d_recon, cache["dec_h"], model.p("dec2_w"), model.p("dec2_b"))
        d_dec_a = relu_backward(d_dec_h, cache["dec_a"])
        d_latent += affine_backward(d_dec_a, cache["latent"], model.p("dec1_w"), model.p("dec1_b"))

    if d_embedding is not None:
        d_u = l2_normalize_rows_backward(d_embedding, cache["embedding"], cache["proj_norms"])
        d_latent += affine_backward(d_u, cache["latent"], model.p("proj_w"), model.p("proj_b"))

    if d_probs is not None:
        d_logits = softmax_rows_backward(d_probs, cache["probs"])
        d_latent += affine_backward(d_logits, cache["latent"], model.p("clf_w"), model.p("clf_b"))

    d_enc_h = affine_backward(d_latent, cache["enc_h"], model.p("enc2_w"), model.p("enc2_b"))
    d_enc_a = relu_backward(d_enc_h, cache["enc_a"])
    return affine_backward(d_enc_a, cache["x"], model.p("enc1_w"), model.p("enc1_b"))


@dataclass
class ModelBundle:
    views: list  # list of ViewModel, view order fixed

    @classmethod
    def create(
        cls,
        input_dims,
        num_clusters: int,
        seed: int,
        hidden_dim: int = 256,
        latent_dim: int = 64,
    ) -> "ModelBundle":
        return cls(
            views=[
                ViewModel.create(
                    input_dim=d,
                    num_clusters=num_clusters,
                    seed=seed,
                    view_index=i,
                    hidden_dim=hidden_dim,
                    latent_dim=latent_dim,
                )
                for i, d in enumerate(input_dims)
            ]
        )

    def parameters(self):
        out = []
        for m in self.views:
            out.extend(m.parameters())
        return out

    def zero_grads(self):
        for m in self.views:
            m.zero_grads()

    def named_arrays(self):
        for i, m in enumerate(self.views):
            for name in sorted(m.params):
                yield f"view{i}/{name}", m.params[name].value


def save_checkpoint(bundle: ModelBundle, path):
    """Length-prefixed named float64 arrays; round-trips bit-exactly."""
    entries = list(bundle.named_arrays())
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(entries)))
        for name, arr in entries:
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(bundle: ModelBundle, path):
    """Load arrays saved by save_checkpoint into an identically-shaped bundle."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (magic {magic!r})")
        version, count = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        arrays = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode("utf-8")
            rows, cols = struct.unpack("<II", fh.read(8))
            data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
            arrays[name] = data.reshape(rows, cols).astype(np.float64)
    for name, arr in bundle.named_arrays():
        if name not in arrays:
            raise ValueError(f"{path}: checkpoint missing array {name}")
        if arrays[name].shape != arr.shape:
            raise ValueError(
                f"{path}: array {name} has shape {arrays[name].shape}, "
                f"bundle expects {arr.shape}"
            )
        arr[...] = arrays[name]
    return bundle
