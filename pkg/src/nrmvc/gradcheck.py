"""Finite-difference gradient verification.

The caller evaluates the loss once with analytic gradients accumulated into
each Parameter.grad, then hands the same (deterministic) loss function here.
Central differences perturb every entry in turn and the worst relative
disagreement is returned.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .layers import Parameter


def grad_check(
    loss_fn: Callable[[], float],
    params: Iterable[Parameter],
    step: float = 1e-5,
    zero_floor: float = 1e-10,
) -> float:
    """Return max relative error between param.grad and central differences.

    Entries where both gradients are below zero_floor in magnitude count as
    exact agreement. Raises if the loss ever evaluates non-finite.
    """
    params = list(params)
    analytic = [p.grad.copy() for p in params]
    max_err = 0.0
    for p, a in zip(params, analytic):
        flat = p.value.reshape(-1)
        a_flat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = float(loss_fn())
            flat[i] = orig - step
            f_minus = float(loss_fn())
            flat[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise FloatingPointError(
                    f"non-finite loss during finite differences at entry {i} "
                    f"of parameter with shape {p.value.shape}: "
                    f"f(+h)={f_plus}, f(-h)={f_minus}"
                )
            numeric = (f_plus - f_minus) / (2.0 * step)
            scale = max(abs(a_flat[i]), abs(numeric))
            if scale < zero_floor:
                continue
            max_err = max(max_err, abs(a_flat[i] - numeric) / scale)
    return max_err
