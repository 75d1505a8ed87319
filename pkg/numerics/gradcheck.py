"""
Central finite-difference check of analytic gradients.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from numerics.tensor import Tape, Tensor, backward


@dataclass
class GradCheckReport:
    eps: float
    errors: dict = field(default_factory=dict)  # parameter name -> max relative error
    checked: dict = field(default_factory=dict)  # parameter name -> entries compared

    @property
    def max_error(self):
        return max(self.errors.values(), default=0.0)

    def worst(self):
        if not self.errors:
            return None, 0.0
        name = max(self.errors, key=self.errors.get)
        return name, self.errors[name]

    def passed(self, tolerance):
        return self.max_error < tolerance


def _evaluate(fn, params):
    return float(fn(params).data.reshape(-1)[0])


def finite_diff_check(fn: Callable[[Mapping[str, Tensor]], Tensor], params: Mapping[str, Tensor], eps=1e-3, *,
                      floor=1e-2, max_entries=None, seed=0):
    """Compare backward() against central differences for every parameter tensor.

    The error of a tensor is max|analytic - numeric| divided by
    max(max|analytic|, max|numeric|, floor); gradients below `floor` are
    therefore compared absolutely. With `max_entries`, a seeded random subset
    of each tensor's entries is perturbed.
    """
    with Tape() as tape:
        loss = fn(params)
    analytic = backward(tape, loss, params)
    rng = np.random.default_rng(seed)
    report = GradCheckReport(eps=eps)
    for name, tensor in params.items():
        flat = tensor.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        expected = analytic[name].reshape(-1)[indices].astype(np.float64)
        numeric = np.empty(indices.size, dtype=np.float64)
        for k, index in enumerate(indices):
            original = flat[index]
            flat[index] = original + flat.dtype.type(eps)
            upper, x_upper = _evaluate(fn, params), float(flat[index])
            flat[index] = original - flat.dtype.type(eps)
            lower, x_lower = _evaluate(fn, params), float(flat[index])
            flat[index] = original
            numeric[k] = (upper - lower) / (x_upper - x_lower)
        scale = max(np.abs(expected).max(initial=0.0), np.abs(numeric).max(initial=0.0), floor)
        report.errors[name] = float(np.abs(expected - numeric).max(initial=0.0) / scale)
        report.checked[name] = int(indices.size)
    return report
