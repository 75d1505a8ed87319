"""
Seeded sampling of training/test constraints from extracted phrase pairs.
"""
from __future__ import annotations

import logging
from typing import List, Sequence

import numpy as np

from datapipe.corpus_io import ParallelCorpus, PhraseConstraint
from datapipe.phrases import PhrasePair, extract_phrase_pairs
from errors import DataError

logger = logging.getLogger(__name__)

MAX_CONSTRAINTS = 3
MAX_PHRASE_LEN = 3


def sentence_rng(seed, index):
    """Generator for one sentence, independent of how many sentences came before it."""
    return np.random.default_rng([int(seed), int(index)])


def _overlaps(a, b):
    return a[0] <= b[1] and b[0] <= a[1]


def sample_constraints(pairs: Sequence[PhrasePair], rng, max_constraints=MAX_CONSTRAINTS,
                       max_phrase_len=MAX_PHRASE_LEN, min_constraints=0) -> List[PhraseConstraint]:
    """Draw N uniformly from {min..min(max_constraints, candidates)} and pick N pairs with disjoint spans.

    `rng` is a numpy Generator or an integer seed. Candidates are visited in
    random order and skipped when they overlap an already chosen pair on
    either side, so fewer than N constraints may come back.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    candidates = [p for p in pairs
                  if 1 <= p.source_length <= max_phrase_len and 1 <= p.target_length <= max_phrase_len]
    upper = min(max_constraints, len(candidates))
    count = int(rng.integers(min(min_constraints, upper), upper + 1))
    chosen = []
    for index in rng.permutation(len(candidates)):
        if len(chosen) == count:
            break
        pair = candidates[index]
        if any(_overlaps(pair.source_span, c.source_span) or _overlaps(pair.target_span, c.target_span)
               for c in chosen):
            continue
        chosen.append(pair)
    order = rng.permutation(len(chosen))
    return [chosen[k].as_constraint() for k in order]


def sample_corpus_constraints(corpus: ParallelCorpus, seed, max_constraints=MAX_CONSTRAINTS,
                              max_phrase_len=MAX_PHRASE_LEN, min_constraints=0):
    if corpus.alignments is None:
        raise DataError("constraint sampling needs word alignments")
    records = []
    for index, (src, tgt, links) in enumerate(zip(corpus.sources, corpus.targets, corpus.alignments)):
        pairs = extract_phrase_pairs(src, tgt, links, max_phrase_len)
        records.append(sample_constraints(pairs, sentence_rng(seed, index), max_constraints, max_phrase_len,
                                          min_constraints))
    logger.info("sampled %d constraints for %d sentences", sum(len(r) for r in records), len(records))
    return records
