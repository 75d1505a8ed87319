from __future__ import annotations

from typing import Sequence

from datapipe.corpus_io import PhraseConstraint


def constraint_overlap_ratio(train: Sequence[Sequence[PhraseConstraint]], test: Sequence[Sequence[PhraseConstraint]]):
    """Percentage of test constraint pairs that also occur among the training constraints (None without test pairs)."""
    seen = {(c.source, c.target) for record in train for c in record}
    pairs = [(c.source, c.target) for record in test for c in record]
    if not pairs:
        return None
    return 100.0 * sum(pair in seen for pair in pairs) / len(pairs)
