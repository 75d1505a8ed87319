"""Corpus BLEU-4 over whitespace words, single reference, with exponential smoothing of zero n-gram matches."""
from __future__ import annotations

import collections
import math
from typing import Sequence

from errors import DataError

MAX_ORDER = 4


def ngrams(words, n):
    counts = collections.Counter()
    for i in range(len(words) - n + 1):
        counts[tuple(words[i:i + n])] += 1
    return counts


def corpus_statistics(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]], max_order=MAX_ORDER):
    """Clipped matches and totals per order plus hypothesis/reference lengths, summed over the corpus."""
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_order + 1):
            guess = ngrams(hyp, n)
            totals[n - 1] += sum(guess.values())
            matches[n - 1] += sum((guess & ngrams(ref, n)).values())
    return matches, totals, hyp_len, ref_len


def corpus_bleu(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]], max_order=MAX_ORDER):
    """BLEU in [0, 100]. An order without matches gets precision 1 / (2^k * total), k counting such orders so far.

    Orders the hypotheses are too short to contain are left out of the geometric mean.
    """
    if len(hypotheses) != len(references):
        raise DataError(f"{len(hypotheses)} hypotheses for {len(references)} references")
    if not hypotheses:
        raise DataError("BLEU of an empty corpus is undefined")
    matches, totals, hyp_len, ref_len = corpus_statistics(hypotheses, references, max_order)
    orders = [(m, t) for m, t in zip(matches, totals) if t > 0]
    if hyp_len == 0 or not orders:
        return 0.0
    log_precision = 0.0
    smooth = 1.0
    for match, total in orders:
        if match == 0:
            smooth *= 2.0
            log_precision += math.log(1.0 / (smooth * total))
        else:
            log_precision += math.log(match / total)
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_precision / len(orders))
