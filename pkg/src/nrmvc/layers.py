"""Dense layer primitives with explicit forward/backward passes.

Everything runs in float64. Matrices are plain 2-D numpy arrays; gradients
are accumulated into Parameter.grad by the backward functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Raised when array shapes do not line up for an operation."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


@dataclass
class Parameter:
    """A trainable array plus its accumulated gradient (same shape)."""

    value: np.ndarray
    grad: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.value = as_matrix(self.value)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        else:
            self.grad = as_matrix(self.grad)
            if self.grad.shape != self.value.shape:
                raise DimensionError(
                    f"grad shape {self.grad.shape} != value shape {self.value.shape}"
                )

    def zero_grad(self):
        self.grad[...] = 0.0

    @property
    def shape(self):
        return self.value.shape


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def affine_forward(x: np.ndarray, weight: Parameter, bias: Parameter) -> np.ndarray:
    x = as_matrix(x)
    if x.shape[1] != weight.value.shape[0]:
        raise DimensionError(
            f"affine: input shape {x.shape} incompatible with weight shape "
            f"{weight.value.shape}"
        )
    if bias.value.shape != (1, weight.value.shape[1]):
        raise DimensionError(
            f"affine: bias shape {bias.value.shape} must be "
            f"(1, {weight.value.shape[1]})"
        )
    return x @ weight.value + bias.value


def affine_backward(
    upstream: np.ndarray, x: np.ndarray, weight: Parameter, bias: Parameter
) -> np.ndarray:
    """Accumulate weight/bias grads, return the gradient w.r.t. the input."""
    upstream = as_matrix(upstream)
    x = as_matrix(x)
    if upstream.shape != (x.shape[0], weight.value.shape[1]):
        raise DimensionError(
            f"affine backward: upstream shape {upstream.shape} does not match "
            f"forward output shape ({x.shape[0]}, {weight.value.shape[1]})"
        )
    weight.grad += x.T @ upstream
    bias.grad += upstream.sum(axis=0, keepdims=True)
    return upstream @ weight.value.T


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(upstream: np.ndarray, cached_x: np.ndarray) -> np.ndarray:
    return np.where(cached_x > 0.0, upstream, 0.0)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row softmax, stabilised by subtracting each row's max."""
    z = as_matrix(logits)
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_backward(upstream: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. logits given dL/dprobs and the cached softmax output."""
    inner = (upstream * probs).sum(axis=1, keepdims=True)
    return probs * (upstream - inner)


def l2_normalize_rows(x: np.ndarray, eps: float = 1e-12):
    """Scale each row to unit length.

    Rows with norm below eps are left at zero and counted as degenerate;
    returns (normalized, norms, degenerate_count).
    """
    x = as_matrix(x)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    degenerate = norms[:, 0] < eps
    safe = np.where(degenerate[:, None], 1.0, norms)
    out = np.where(degenerate[:, None], 0.0, x / safe)
    return out, norms, int(degenerate.sum())


def l2_normalize_rows_backward(
    upstream: np.ndarray, normalized: np.ndarray, norms: np.ndarray, eps: float = 1e-12
) -> np.ndarray:
    degenerate = norms[:, 0] < eps
    safe = np.where(degenerate[:, None], 1.0, norms)
    inner = (upstream * normalized).sum(axis=1, keepdims=True)
    grad = (upstream - normalized * inner) / safe
    grad[degenerate] = 0.0
    return grad
