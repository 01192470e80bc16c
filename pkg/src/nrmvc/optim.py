"""Adam optimizer with per-parameter state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import Parameter


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    timestep: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_parameter(cls, param: Parameter, lr: float = 1e-4) -> "AdamState":
        return cls(
            first_moment=np.zeros_like(param.value),
            second_moment=np.zeros_like(param.value),
            lr=lr,
        )


def adam_step(param: Parameter, state: AdamState) -> Parameter:
    """Apply one bias-corrected Adam update using param.grad."""
    g = param.grad
    if g.shape != state.first_moment.shape:
        raise ValueError(
            f"adam state shape {state.first_moment.shape} != grad shape {g.shape}"
        )
    state.timestep += 1
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * g
    state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * g * g
    m_hat = state.first_moment / (1.0 - state.beta1 ** state.timestep)
    v_hat = state.second_moment / (1.0 - state.beta2 ** state.timestep)
    param.value -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return param
