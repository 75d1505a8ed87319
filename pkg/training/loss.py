"""
Weighted, label-smoothed translation loss.

Target positions whose token belongs to the sentence's constraint targets
are weighted by alpha, all other positions by beta.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from constraints.constraint_set import ConstraintSet, classify_target_tokens
from datapipe.vocab import BOS_ID, EOS_ID
from errors import DataError
from numerics import tensor as T


@dataclass(frozen=True)
class Example:
    source_ids: tuple
    target_ids: tuple  # gold output, ending with EOS
    constraints: ConstraintSet = field(default_factory=ConstraintSet)

    @classmethod
    def from_ids(cls, source_ids, target_ids, constraints=None):
        return cls(tuple(source_ids), tuple(target_ids) + (EOS_ID,), constraints or ConstraintSet())

    @property
    def decoder_input(self):
        return (BOS_ID,) + self.target_ids[:-1]

    @property
    def tokens(self):
        return len(self.target_ids)


def token_losses(probs, gold, smoothing):
    """Per-position smoothed cross-entropy: (1-eps) * -log P(gold) + eps * mean over V of -log P."""
    if not 0.0 <= smoothing < 1.0:
        raise ValueError(f"label smoothing must lie in [0, 1), got {smoothing}")
    log_probs = T.log(probs)
    nll = T.gather_entries(log_probs, np.arange(len(gold)), gold)
    losses = T.scale(nll, -(1.0 - smoothing))
    if smoothing > 0.0:
        losses = T.sub(losses, T.scale(T.mean_last_axis(log_probs), smoothing))
    return losses


def loss_terms(model, batch: Sequence[Example], smoothing=0.1, rng=None):
    """Constraint-token and other-token loss sums over the batch, plus the token count."""
    if not batch:
        raise DataError("cannot compute a loss over an empty batch")
    constrained, unconstrained = [], []
    tokens = 0
    for example in batch:
        probs = model.forward(example.source_ids, example.decoder_input, example.constraints, rng)
        losses = token_losses(probs, example.target_ids, smoothing)
        mask = classify_target_tokens(example.target_ids, example.constraints).astype(np.float64)
        constrained.append(T.sum_all(T.mul(losses, T.constant(mask))))
        unconstrained.append(T.sum_all(T.mul(losses, T.constant(1.0 - mask))))
        tokens += example.tokens
    return _total(constrained), _total(unconstrained), tokens


def _total(parts):
    total = parts[0]
    for part in parts[1:]:
        total = T.add(total, part)
    return total


def constrained_loss(model, batch: Sequence[Example], alpha, beta, smoothing=0.1, rng=None, reduction="token_mean"):
    """alpha * L_c + beta * L_u, divided by the batch token count unless reduction="sum"."""
    if alpha < 0 or beta < 0 or alpha + beta <= 0:
        raise ValueError(f"loss weights must be non-negative and not both zero (alpha={alpha}, beta={beta})")
    l_c, l_u, tokens = loss_terms(model, batch, smoothing, rng)
    loss = T.add(T.scale(l_c, alpha), T.scale(l_u, beta))
    if reduction == "token_mean":
        return T.scale(loss, 1.0 / tokens)
    if reduction == "sum":
        return loss
    raise ValueError(f"unknown reduction {reduction!r}")
