"""
Beam search and bank-allocated constrained beam search.

Both searches only talk to the model through its search protocol:
`start(x_ids, cset)` returns a per-sentence context and
`next_log_probs(context, prefix)` the log-distribution of the next token
after a BOS-initial prefix. An optional `word_internal_ids` attribute
names the subword ids that do not end a word; constraint matches never start
right after one of them. Scores are log-probabilities divided by the
number of emitted tokens (EOS included).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from constraints.constraint_set import ConstraintSet
from decoding.coverage import CoverageState, update_coverage

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple  # emitted ids, without BOS
    log_prob: float
    coverage: CoverageState
    finished: bool = False

    @property
    def score(self):
        return self.log_prob / max(1, len(self.tokens))

    def mid_word(self, word_internal):
        return bool(self.tokens) and self.tokens[-1] in word_internal

    def extend(self, token, log_prob, eos_id, word_internal=frozenset()):
        return Hypothesis(self.tokens + (int(token),), self.log_prob + float(log_prob),
                          update_coverage(self.coverage, token, self.mid_word(word_internal)), token == eos_id)

    def output_tokens(self, eos_id):
        return self.tokens[:-1] if self.finished and self.tokens and self.tokens[-1] == eos_id else self.tokens


@dataclass(frozen=True)
class SearchResult:
    hypothesis: Hypothesis
    reached_eos: bool  # False: no hypothesis finished within max_len
    constraints_met: bool
    excluded: tuple = ()  # indices of constraints dropped as unsatisfiable


def default_max_len(x_ids, cset: ConstraintSet):
    return 2 * len(x_ids) + len(cset.target_tokens) + 8


def _word_internal_ids(model):
    return frozenset(getattr(model, "word_internal_ids", ()))


def _final_key(hyp):
    return -hyp.score, hyp.tokens, len(hyp.tokens)


def _top_tokens(log_probs, k):
    """Best k token ids, ties broken towards lower ids."""
    return np.argsort(-log_probs, kind="stable")[:k]


def _finish(finished, live, fallback_key, excluded):
    if finished:
        best = min(finished, key=_final_key)
        return SearchResult(best, True, best.coverage.all_met, excluded)
    logger.warning("no hypothesis reached EOS within the length limit; returning the best unfinished one")
    best = min(live, key=fallback_key) if live else None
    return SearchResult(best, False, bool(best and best.coverage.all_met), excluded)


def beam_search(model, x_ids, cset: Optional[ConstraintSet] = None, beam_size=4, max_len=None) -> SearchResult:
    """Length-normalized beam search. EOS extensions leave the beam; search stops once beam_size
    hypotheses have finished or no live hypothesis remains."""
    if beam_size < 1:
        raise ValueError(f"beam size must be at least 1, got {beam_size}")
    cset = cset or ConstraintSet()
    max_len = max_len or default_max_len(x_ids, cset)
    word_internal = _word_internal_ids(model)
    context = model.start(x_ids, cset)
    live = [Hypothesis((), 0.0, CoverageState.start(p.target_tokens for p in cset.pairs))]  # tracked, not enforced
    finished: List[Hypothesis] = []
    for _ in range(max_len):
        candidates = []
        for hyp in live:
            log_probs = model.next_log_probs(context, (model.bos_id,) + hyp.tokens)
            for token in _top_tokens(log_probs, beam_size):
                new = hyp.extend(int(token), log_probs[token], model.eos_id, word_internal)
                (finished if new.finished else candidates).append(new)
        live = sorted(candidates, key=lambda h: (-h.log_prob, h.tokens))[:beam_size]
        if not live or len(finished) >= beam_size:
            break
    return _finish(finished, live, _final_key, ())


def usable_constraints(model, cset: ConstraintSet):
    """Target sequences the search can produce, and the indices of those it cannot (UNK or out of vocabulary)."""
    targets, excluded = [], []
    for index, pair in enumerate(cset.pairs):
        if all(0 <= t < model.vocab_size and t not in (model.unk_id, model.eos_id) for t in pair.target_tokens):
            targets.append(pair.target_tokens)
        else:
            excluded.append(index)
            logger.warning("constraint %d (%r) has target tokens outside the vocabulary and is dropped",
                           index, pair.raw_target or pair.target_tokens)
    return targets, tuple(excluded)


def bank_sizes(beam_size, banks):
    """Slots per bank, dealt round-robin starting from the bank with the most met tokens."""
    sizes = [0] * banks
    for slot in range(beam_size):
        sizes[banks - 1 - slot % banks] += 1
    return sizes


def allocate(candidates, beam_size, banks):
    """Choose the next beam: each bank keeps its best members, unused slots move to the nearest
    bank that still has candidates left (the larger leftover first, then the higher bank)."""
    by_bank = [[] for _ in range(banks)]
    for hyp in candidates:
        by_bank[hyp.coverage.met_token_count].append(hyp)
    for bank in by_bank:
        bank.sort(key=lambda h: (-h.log_prob, h.tokens))
    sizes = bank_sizes(beam_size, banks)
    unused = []  # origin bank of every slot its bank cannot fill
    for index, bank in enumerate(by_bank):
        if sizes[index] > len(bank):
            unused.extend([index] * (sizes[index] - len(bank)))
            sizes[index] = len(bank)
    for origin in sorted(unused, reverse=True):
        leftover = [(i, len(by_bank[i]) - sizes[i]) for i in range(banks) if len(by_bank[i]) > sizes[i]]
        if not leftover:
            break
        nearest = min(leftover, key=lambda item: (abs(item[0] - origin), -item[1], -item[0]))
        sizes[nearest[0]] += 1
    chosen = []
    for index in reversed(range(banks)):
        chosen.extend(by_bank[index][:sizes[index]])
    return chosen


def vdba_search(model, x_ids, cset: Optional[ConstraintSet] = None, beam_size=4, max_len=None) -> SearchResult:
    """Constrained beam search with dynamic beam allocation over banks of met constraint tokens.

    Besides the model's top-k tokens every hypothesis is extended by the next
    token of each unmet constraint. A hypothesis may end only when every
    usable constraint is met. With no usable constraints this is beam_search.
    """
    if beam_size < 1:
        raise ValueError(f"beam size must be at least 1, got {beam_size}")
    cset = cset or ConstraintSet()
    targets, excluded = usable_constraints(model, cset)
    start = CoverageState.start(targets)
    banks = start.total_tokens + 1
    max_len = max_len or default_max_len(x_ids, cset)
    word_internal = _word_internal_ids(model)
    context = model.start(x_ids, cset)
    live = [Hypothesis((), 0.0, start)]
    finished: List[Hypothesis] = []
    for _ in range(max_len):
        candidates = {}
        for hyp in live:
            log_probs = model.next_log_probs(context, (model.bos_id,) + hyp.tokens)
            tokens = [int(t) for t in _top_tokens(log_probs, beam_size)]
            tokens.extend(hyp.coverage.forced_tokens(hyp.mid_word(word_internal)))
            if targets and hyp.coverage.all_met:
                tokens.append(model.eos_id)
            for token in dict.fromkeys(tokens):
                new = hyp.extend(token, log_probs[token], model.eos_id, word_internal)
                if new.finished:
                    if new.coverage.all_met:
                        finished.append(new)
                    continue
                candidates.setdefault(new.tokens, new)
        live = allocate(list(candidates.values()), beam_size, banks)
        if not live or len(finished) >= beam_size:
            break
    result = _finish(finished, live, lambda h: (-h.coverage.met_token_count, -h.score, h.tokens),
                     excluded)
    if not result.constraints_met:
        logger.warning("constrained search could not satisfy every constraint for a source of length %d", len(x_ids))
    return result
