"""
Lexical constraint pairs in subword-id form.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from datapipe.bpe import BpeModel, segment
from datapipe.corpus_io import PhraseConstraint, read_constraint_file
from errors import VocabularyError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstraintPair:
    source_tokens: tuple
    target_tokens: tuple
    raw_source: str = ""
    raw_target: str = ""

    def __post_init__(self):
        if not self.source_tokens or not self.target_tokens:
            raise ValueError("constraint pairs need at least one source and one target token")
        object.__setattr__(self, "source_tokens", tuple(int(i) for i in self.source_tokens))
        object.__setattr__(self, "target_tokens", tuple(int(i) for i in self.target_tokens))


@dataclass(frozen=True)
class ConstraintSet:
    pairs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def source_length(self):
        return sum(len(p.source_tokens) for p in self.pairs)

    @property
    def target_tokens(self):
        """Flattened target-side ids in pair order (a multiset)."""
        return tuple(token for p in self.pairs for token in p.target_tokens)

    @property
    def target_token_ids(self):
        return frozenset(self.target_tokens)

    @classmethod
    def empty(cls):
        return cls(())

    @classmethod
    def from_phrases(cls, phrases: Iterable[PhraseConstraint], bpe: BpeModel, on_unknown="error"):
        """Segment surface phrase pairs with the shared BPE model and map them to ids.

        on_unknown="error" raises VocabularyError for characters or subwords the
        vocabulary lacks; "unk" maps them to the UNK id instead.
        """
        pairs = []
        for phrase in phrases:
            ids = []
            for words in (phrase.source, phrase.target):
                tokens, lossy = segment(bpe, list(words))
                if lossy and on_unknown == "error":
                    raise VocabularyError(f"constraint {' '.join(words)!r} contains characters outside the vocabulary")
                ids.append(tuple(bpe.vocab.encode(tokens, on_unknown=on_unknown)))
            pairs.append(ConstraintPair(ids[0], ids[1], " ".join(phrase.source), " ".join(phrase.target)))
        return cls(tuple(pairs))


def parse_constraint_file(path, bpe: BpeModel, on_unknown="error"):
    """One ConstraintSet per line of a constraint JSON-lines file."""
    records = read_constraint_file(path)
    sets = [ConstraintSet.from_phrases(record, bpe, on_unknown) for record in records]
    logger.info("read %d constraint records (%d pairs) from %s", len(sets), sum(len(s) for s in sets), path)
    return sets


def classify_target_tokens(y: Sequence[int], cset: ConstraintSet):
    """True at every position whose token id occurs among the constraint target tokens."""
    members = cset.target_token_ids
    return np.fromiter((int(token) in members for token in y), dtype=bool, count=len(y))
