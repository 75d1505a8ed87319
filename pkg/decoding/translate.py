"""
Corpus-level translation: an outer loop over sentences sharing read-only parameters.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

from constraints.constraint_set import ConstraintSet
from decoding.search import SearchResult, beam_search, vdba_search

logger = logging.getLogger(__name__)

DECODERS = {"beam": beam_search, "vdba": vdba_search}


def translate_sentence(model, x_ids, cset: ConstraintSet, decoder="vdba", beam_size=4,
                       max_len: Optional[int] = None) -> SearchResult:
    try:
        search = DECODERS[decoder]
    except KeyError:
        raise ValueError(f"unknown decoder {decoder!r}, expected one of {sorted(DECODERS)}") from None
    return search(model, list(x_ids), cset, beam_size, max_len)


def translate_corpus(model, sources: Sequence[Sequence[int]], csets: Optional[Sequence[ConstraintSet]] = None,
                     decoder="vdba", beam_size=4, max_len: Optional[int] = None, workers=1) -> List[SearchResult]:
    """Results in source order. workers > 1 decodes sentences on a thread pool."""
    if csets is None:
        csets = [ConstraintSet()] * len(sources)
    if len(csets) != len(sources):
        raise ValueError(f"{len(csets)} constraint sets for {len(sources)} sentences")

    def run(item):
        x_ids, cset = item
        return translate_sentence(model, x_ids, cset, decoder, beam_size, max_len)

    items = list(zip(sources, csets))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="translate") as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]
    unfinished = sum(not r.reached_eos for r in results)
    unmet = sum(not r.constraints_met for r in results)
    logger.info("translated %d sentences with %s search (beam %d): %d without EOS, %d with unmet constraints",
                len(results), decoder, beam_size, unfinished, unmet)
    return results
