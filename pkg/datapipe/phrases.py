"""
Alignment-consistent phrase-pair extraction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

from datapipe.corpus_io import AlignmentLinks, PhraseConstraint


@dataclass(frozen=True)
class PhrasePair:
    source_span: tuple  # inclusive (i1, i2)
    target_span: tuple  # inclusive (j1, j2)
    source_words: tuple
    target_words: tuple

    @property
    def source_length(self):
        return self.source_span[1] - self.source_span[0] + 1

    @property
    def target_length(self):
        return self.target_span[1] - self.target_span[0] + 1

    def as_constraint(self):
        return PhraseConstraint(self.source_words, self.target_words)


def is_consistent(links: AlignmentLinks, source_span, target_span):
    """At least one link inside the box and no link with exactly one end inside it."""
    i1, i2 = source_span
    j1, j2 = target_span
    inside = False
    for i, j in links.links:
        in_source = i1 <= i <= i2
        in_target = j1 <= j <= j2
        if in_source != in_target:
            return False
        inside = inside or in_source
    return inside


def extract_phrase_pairs(source: Sequence[str], target: Sequence[str], links: AlignmentLinks, max_len=3) -> List[PhrasePair]:
    """Every consistent pair with both spans at most max_len long, ordered by source span then target span."""
    pairs = []
    if not links:
        return pairs
    for i1 in range(len(source)):
        for i2 in range(i1, min(i1 + max_len, len(source))):
            for j1 in range(len(target)):
                for j2 in range(j1, min(j1 + max_len, len(target))):
                    if is_consistent(links, (i1, i2), (j1, j2)):
                        pairs.append(PhrasePair((i1, i2), (j1, j2), tuple(source[i1:i2 + 1]),
                                                tuple(target[j1:j2 + 1])))
    return pairs
