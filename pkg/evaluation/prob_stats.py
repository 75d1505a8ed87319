"""
Average probability the model gives to gold tokens under teacher forcing.
"""
from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from constraints.constraint_set import classify_target_tokens
from training.loss import Example


def gold_probabilities(model, example: Example):
    probs = model.forward(example.source_ids, example.decoder_input, example.constraints).data
    return probs[np.arange(len(example.target_ids)), list(example.target_ids)].astype(np.float64)


def prob_stats(model, examples: Sequence[Example]) -> Tuple[float, Optional[float]]:
    """(mean over all gold tokens, mean over constraint-token positions or None when there are none)."""
    everything, constrained = [], []
    for example in examples:
        gold = gold_probabilities(model, example)
        mask = classify_target_tokens(example.target_ids, example.constraints)
        everything.append(gold)
        constrained.append(gold[mask])
    everything = np.concatenate(everything) if everything else np.zeros(0)
    constrained = np.concatenate(constrained) if constrained else np.zeros(0)
    avg_all = float(everything.mean()) if everything.size else float("nan")
    avg_constrained = float(constrained.mean()) if constrained.size else None
    return avg_all, avg_constrained
