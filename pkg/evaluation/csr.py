"""
Copying success rate: the share of constraints whose target phrase appears
contiguously, at word level, in the hypothesis.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

from errors import DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SentenceCoverage:
    total: int
    met: int


def _target_words(constraint):
    if isinstance(constraint, str):
        return tuple(constraint.split())
    return tuple(getattr(constraint, "target", constraint))


def contains_phrase(words: Sequence[str], phrase: Sequence[str]):
    width = len(phrase)
    phrase = tuple(phrase)
    return any(tuple(words[i:i + width]) == phrase for i in range(len(words) - width + 1))


def csr_details(hypotheses: Sequence[Sequence[str]], constraints: Sequence[Sequence]) -> List[SentenceCoverage]:
    """Per-sentence constraint totals and matches. Constraints are PhraseConstraint objects or target word sequences."""
    if len(hypotheses) != len(constraints):
        raise DataError(f"{len(hypotheses)} hypotheses but {len(constraints)} constraint records")
    details = []
    for words, record in zip(hypotheses, constraints):
        words = list(words)
        met = sum(contains_phrase(words, _target_words(c)) for c in record)
        details.append(SentenceCoverage(len(record), met))
    return details


def csr(hypotheses: Sequence[Sequence[str]], constraints: Sequence[Sequence]):
    """Percentage of met constraints; 100 when there are none."""
    details = csr_details(hypotheses, constraints)
    total = sum(d.total for d in details)
    if total == 0:
        logger.warning("no constraints to score; copying success rate defaults to 100")
        return 100.0
    return 100.0 * sum(d.met for d in details) / total
