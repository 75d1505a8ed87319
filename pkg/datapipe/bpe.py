"""
Byte-pair-encoding subword segmentation, learned jointly over both languages.

Non-final pieces of a word carry the SEPARATOR suffix ("乐@@ 团"), so that
`debpe` can rejoin words by concatenation.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from datapipe.vocab import UNK, Vocabulary
from errors import ConfigError, DataError

logger = logging.getLogger(__name__)

SEPARATOR = "@@"
END_OF_WORD = "</w>"
FILE_HEADER = "#bpe-model v1"


def _word_symbols(word, alphabet=None):
    chars = [c if alphabet is None or c in alphabet else UNK for c in word]
    return tuple(chars[:-1]) + (chars[-1] + END_OF_WORD,)


def _merge_symbols(symbols, pair):
    merged = []
    i = 0
    while i < len(symbols):
        if i < len(symbols) - 1 and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            merged.append(pair[0] + pair[1])
            i += 2
        else:
            merged.append(symbols[i])
            i += 1
    return tuple(merged)


def _surface(symbols):
    pieces = [s + SEPARATOR for s in symbols[:-1]]
    pieces.append(symbols[-1][: -len(END_OF_WORD)])
    return pieces


@dataclass
class BpeModel:
    merges: list
    alphabet: frozenset
    vocab: Vocabulary
    _ranks: dict = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.merges = [tuple(pair) for pair in self.merges]
        self._ranks = {pair: rank for rank, pair in enumerate(self.merges)}
        self._cache = {}

    @property
    def word_internal_ids(self):
        """Ids of the vocabulary pieces that continue into the next token."""
        return frozenset(i for i, token in enumerate(self.vocab.tokens) if token.endswith(SEPARATOR))

    def segment_word(self, word):
        """Subword pieces of one word, plus whether an unseen character was replaced by UNK."""
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        lossy = any(c not in self.alphabet for c in word)
        symbols = _word_symbols(word, self.alphabet)
        while len(symbols) > 1:
            ranked = [(self._ranks.get(pair), pair) for pair in zip(symbols, symbols[1:])]
            ranked = [(rank, pair) for rank, pair in ranked if rank is not None]
            if not ranked:
                break
            symbols = _merge_symbols(symbols, min(ranked)[1])
        result = (_surface(symbols), lossy)
        self._cache[word] = result
        return result


def learn_bpe(sentences: Iterable[Sequence[str]], merges: int):
    """Greedy most-frequent-pair merges; ties go to the lexicographically smallest pair."""
    if merges < 0:
        raise ConfigError(f"merge count must be non-negative, got {merges}")
    word_counts = Counter(word for sentence in sentences for word in sentence)
    if not word_counts:
        raise DataError("cannot learn BPE from an empty corpus")
    alphabet = frozenset(c for word in word_counts for c in word)
    words = {word: _word_symbols(word) for word in word_counts}
    learned = []
    for _ in range(merges):
        pairs = Counter()
        for word, symbols in words.items():
            for pair in zip(symbols, symbols[1:]):
                pairs[pair] += word_counts[word]
        if not pairs:
            break
        best_count = max(pairs.values())
        best = min(pair for pair, count in pairs.items() if count == best_count)
        learned.append(best)
        words = {word: _merge_symbols(symbols, best) for word, symbols in words.items()}
    logger.info("learned %d BPE merges over %d word types", len(learned), len(word_counts))
    pieces = set()
    for a, b in learned:
        symbol = a + b
        pieces.add(symbol[: -len(END_OF_WORD)] if symbol.endswith(END_OF_WORD) else symbol + SEPARATOR)
    for symbols in words.values():
        pieces.update(_surface(symbols))
    for char in alphabet:
        pieces.update((char, char + SEPARATOR))
    return BpeModel(learned, alphabet, Vocabulary(sorted(pieces)))


def segment(model: BpeModel, sentence):
    """Subword tokens of a sentence and a flag telling whether the segmentation is lossy."""
    words = sentence.split() if isinstance(sentence, str) else list(sentence)
    tokens = []
    lossy = False
    for word in words:
        pieces, word_lossy = model.segment_word(word)
        tokens.extend(pieces)
        lossy = lossy or word_lossy
    return tokens, lossy


def apply_bpe(model: BpeModel, sentence):
    tokens, lossy = segment(model, sentence)
    if lossy:
        logger.warning("unseen characters mapped to %s in %r", UNK, sentence)
    return tokens


def debpe(tokens: Iterable[str]):
    """Rejoin subword tokens into words."""
    words = []
    pending = ""
    for token in tokens:
        if token.endswith(SEPARATOR):
            pending += token[: -len(SEPARATOR)]
        else:
            words.append(pending + token)
            pending = ""
    if pending:
        words.append(pending)
    return words


def save_bpe(model: BpeModel, path):
    lines = [FILE_HEADER, "#alphabet"]
    lines.extend(sorted(model.alphabet))
    lines.append("#merges")
    lines.extend(f"{a} {b}" for a, b in model.merges)
    lines.append("#vocab")
    lines.extend(model.vocab.tokens)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_bpe(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != FILE_HEADER:
        raise DataError(f"{path}: not a BPE model file")
    sections = {"#alphabet": [], "#merges": [], "#vocab": []}
    current = None
    for number, line in enumerate(lines[1:], start=2):
        if line in sections:
            current = sections[line]
        elif current is None:
            raise DataError(f"{path}:{number}: content before the first section")
        else:
            current.append(line)
    merges = []
    for line in sections["#merges"]:
        parts = line.split(" ")
        if len(parts) != 2:
            raise DataError(f"{path}: malformed merge {line!r}")
        merges.append(tuple(parts))
    return BpeModel(merges, frozenset(sections["#alphabet"]), Vocabulary(sections["#vocab"]))


def encode_sentences(model: BpeModel, sentences):
    """Subword ids of every sentence; unknown pieces become UNK."""
    return [model.vocab.encode(apply_bpe(model, list(sentence))) for sentence in sentences]
