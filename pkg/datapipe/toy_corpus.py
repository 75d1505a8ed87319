"""
Synthetic parallel corpus with a bijective lexicon and exact word alignments.

Source words are built from syllables over SOURCE_CONSONANTS, target words
over TARGET_CONSONANTS, so the two sides share only the vowels. A target
sentence is the word-by-word translation of its source with some adjacent
word pairs swapped.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from datapipe.corpus_io import AlignmentLinks, ParallelCorpus
from errors import ConfigError

logger = logging.getLogger(__name__)

SOURCE_CONSONANTS = "bdgklmnprst"
TARGET_CONSONANTS = "cfhjqvwxyz"
VOWELS = "aeiou"


@dataclass(frozen=True)
class ToyCorpusConfig:
    vocab_size: int = 200
    sentences: int = 10000
    min_len: int = 4
    max_len: int = 12
    swap_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.vocab_size < 10:
            raise ConfigError(f"toy vocabulary needs at least 10 words, got {self.vocab_size}")
        if not 1 <= self.min_len <= self.max_len:
            raise ConfigError(f"bad sentence length range [{self.min_len}, {self.max_len}]")
        if not 0.0 <= self.swap_rate <= 1.0:
            raise ConfigError(f"swap rate must lie in [0, 1], got {self.swap_rate}")


def _words(consonants, count, rng):
    syllables = [c + v for c in consonants for v in VOWELS]
    pool = [a + b for a, b in itertools.product(syllables, repeat=2)]
    if count > len(pool):
        pool += [a + b + c for a, b, c in itertools.product(syllables, repeat=3)]
    picked = rng.choice(len(pool), size=count, replace=False)
    return [pool[k] for k in picked]


def build_lexicon(vocab_size, rng):
    """Source word -> target word, bijective."""
    source = _words(SOURCE_CONSONANTS, vocab_size, rng)
    target = _words(TARGET_CONSONANTS, vocab_size, rng)
    return dict(zip(source, target))


def _reordering(length, swap_rate, rng):
    """order[j] is the source position translated at target position j."""
    order = list(range(length))
    position = 0
    while position < length - 1:
        if rng.random() < swap_rate:
            order[position], order[position + 1] = order[position + 1], order[position]
            position += 2
        else:
            position += 1
    return order


def gen_toy_corpus(config: ToyCorpusConfig):
    rng = np.random.default_rng(config.seed)
    lexicon = build_lexicon(config.vocab_size, rng)
    source_words = list(lexicon)
    sources, targets, alignments = [], [], []
    for _ in range(config.sentences):
        length = int(rng.integers(config.min_len, config.max_len + 1))
        source = [source_words[k] for k in rng.integers(0, len(source_words), size=length)]
        order = _reordering(length, config.swap_rate, rng)
        sources.append(tuple(source))
        targets.append(tuple(lexicon[source[i]] for i in order))
        alignments.append(AlignmentLinks(frozenset((i, j) for j, i in enumerate(order))))
    logger.info("generated %d toy sentence pairs over a %d-word lexicon", config.sentences, config.vocab_size)
    return ParallelCorpus(sources, targets, alignments), lexicon
