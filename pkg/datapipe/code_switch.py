"""
Code-switched corpus: some target constraints are replaced by their untranslated source phrase.
"""
from __future__ import annotations

import logging
from typing import List, Sequence

from datapipe.corpus_io import ParallelCorpus, PhraseConstraint
from datapipe.sampling import sentence_rng
from errors import DataError

logger = logging.getLogger(__name__)


def locate_phrases(target: Sequence[str], phrases: Sequence[tuple]):
    """Start index of every phrase so that located phrases do not overlap.

    Occurrences are tried left to right with backtracking; the first assignment
    placing the most phrases wins and a phrase that cannot be placed gets None.
    """
    target = tuple(target)
    occurrences = [[s for s in range(len(target) - len(p) + 1) if target[s:s + len(p)] == tuple(p)] for p in phrases]
    best = [-1, []]

    def place(k, taken, starts):
        if k == len(phrases):
            found = sum(s is not None for s in starts)
            if found > best[0]:
                best[:] = [found, starts]
            return found == len(phrases)
        width = len(phrases[k])
        for start in occurrences[k]:
            span = frozenset(range(start, start + width))
            if not span & taken and place(k + 1, taken | span, starts + [start]):
                return True
        return place(k + 1, taken, starts + [None])

    place(0, frozenset(), [])
    return best[1]


def code_switch_corpus(corpus: ParallelCorpus, constraints: Sequence[Sequence[PhraseConstraint]], seed,
                       probability=0.5):
    """Switch every constraint independently with `probability`, rewriting the target sentence to match.

    Returns the new corpus (without alignments, which no longer hold) and the
    new per-sentence constraints.
    """
    if len(constraints) != len(corpus):
        raise DataError(f"{len(constraints)} constraint records for {len(corpus)} sentence pairs")
    targets: List[tuple] = []
    records = []
    switched = total = 0
    for index, (target, record) in enumerate(zip(corpus.targets, constraints)):
        rng = sentence_rng(seed, index)
        starts = locate_phrases(target, [c.target for c in record])
        new_record = []
        edits = []
        for constraint, start in zip(record, starts):
            if start is None:
                raise DataError(f"sentence {index}: constraint target {' '.join(constraint.target)!r} "
                                f"not found in {' '.join(target)!r}")
            total += 1
            if rng.random() < probability:
                switched += 1
                edits.append((start, len(constraint.target), constraint.source))
                new_record.append(PhraseConstraint(constraint.source, constraint.source))
            else:
                new_record.append(constraint)
        words = list(target)
        for start, width, replacement in sorted(edits, reverse=True):
            words[start:start + width] = replacement
        targets.append(tuple(words))
        records.append(new_record)
    logger.info("code-switched %d of %d constraints", switched, total)
    return ParallelCorpus(corpus.sources, targets), records
