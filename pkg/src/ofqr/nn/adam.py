"""Bias-corrected Adam over :class:`NetworkParams`."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ofqr.errors import ShapeMismatch


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_update(value: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray,
                step: int, state: AdamState) -> None:
    """In-place Adam update of one array (``step`` already incremented)."""
    m *= state.beta1
    m += (1 - state.beta1) * grad
    v *= state.beta2
    v += (1 - state.beta2) * grad * grad
    m_hat = m / (1 - state.beta1**step)
    v_hat = v / (1 - state.beta2**step)
    value -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def adam_step(params, grads: dict[str, np.ndarray], state: AdamState):
    """Update ``params`` in place and return ``(params, state)``."""
    state.step += 1
    for key, value in params.arrays():
        g = grads[key]
        if g.shape != value.shape:
            raise ShapeMismatch(f"gradient {key} has shape {g.shape}, parameter {value.shape}")
        if key not in state.m:
            state.m[key] = np.zeros_like(value)
            state.v[key] = np.zeros_like(value)
        adam_update(value, g, state.m[key], state.v[key], state.step, state)
    params.touch()
    return params, state
