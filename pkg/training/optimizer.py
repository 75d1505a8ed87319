"""
Adam with bias correction, the inverse-square-root warmup schedule and optional global-norm clipping.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional

import numpy as np

from numerics.tensor import Tensor

BETA1 = 0.9
BETA2 = 0.98
EPSILON = 1e-9


@dataclass
class OptimizerState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    steps: Dict[str, int] = field(default_factory=dict)  # per parameter, frozen tensors do not advance

    @classmethod
    def for_params(cls, params: Mapping[str, Tensor]):
        state = cls()
        for name, tensor in params.items():
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
            state.steps[name] = 0
        return state

    @property
    def step(self):
        return max(self.steps.values(), default=0)


def adam_update(params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray], state: OptimizerState, lr,
                beta1=BETA1, beta2=BETA2, eps=EPSILON, names: Optional[Iterable[str]] = None):
    """One Adam step, in place, over `names` (default: every gradient given)."""
    for name in (names if names is not None else grads):
        tensor, grad = params[name], grads[name]
        if grad.shape != tensor.shape:
            raise ValueError(f"gradient for {name} has shape {grad.shape}, parameter has {tensor.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
            state.steps[name] = 0
        step = state.steps[name] + 1
        state.steps[name] = step
        m = state.m[name] = beta1 * state.m[name] + (1.0 - beta1) * grad
        v = state.v[name] = beta2 * state.v[name] + (1.0 - beta2) * grad * grad
        m_hat = m / (1.0 - beta1 ** step)
        v_hat = v / (1.0 - beta2 ** step)
        tensor.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(tensor.data.dtype, copy=False)
    return params, state


def lr_at_step(step, d, warmup):
    """d^-0.5 * min(step^-0.5, step * warmup^-1.5)."""
    if step < 1:
        raise ValueError(f"learning-rate schedule starts at step 1, got {step}")
    return d ** -0.5 * min(step ** -0.5, step * warmup ** -1.5)


def clip_by_global_norm(grads: Dict[str, np.ndarray], max_norm):
    norm = float(np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values())))
    if max_norm is not None and norm > max_norm > 0:
        factor = max_norm / norm
        for name in grads:
            grads[name] = grads[name] * grads[name].dtype.type(factor)
    return norm
