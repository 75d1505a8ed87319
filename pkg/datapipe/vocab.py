"""
Joint subword vocabulary shared by source, target and constraints.
"""
from __future__ import annotations

from typing import Iterable, Sequence

from errors import VocabularyError

PAD, UNK, BOS, EOS = "<pad>", "<unk>", "<s>", "</s>"
SPECIALS = (PAD, UNK, BOS, EOS)
PAD_ID, UNK_ID, BOS_ID, EOS_ID = range(len(SPECIALS))


class Vocabulary:
    def __init__(self, tokens: Iterable[str]):
        self._tokens = list(SPECIALS)
        for token in tokens:
            if token not in SPECIALS:
                self._tokens.append(token)
        self._ids = {token: index for index, token in enumerate(self._tokens)}
        if len(self._ids) != len(self._tokens):
            raise VocabularyError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, token):
        return token in self._ids

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    @property
    def tokens(self):
        return tuple(self._tokens)

    def token_to_id(self, token):
        return self._ids.get(token, UNK_ID)

    def id_to_token(self, index):
        if not 0 <= index < len(self._tokens):
            raise VocabularyError(f"token id {index} outside vocabulary of size {len(self._tokens)}")
        return self._tokens[index]

    def encode(self, tokens: Sequence[str], on_unknown="unk"):
        """Map tokens to ids; unknown tokens become UNK_ID, or raise with on_unknown='error'."""
        ids = []
        for token in tokens:
            index = self._ids.get(token)
            if index is None:
                if on_unknown == "error":
                    raise VocabularyError(f"token {token!r} is not in the vocabulary")
                index = UNK_ID
            ids.append(index)
        return ids

    def decode(self, ids: Iterable[int], strip_specials=True):
        tokens = []
        for index in ids:
            if strip_specials and index in (PAD_ID, BOS_ID, EOS_ID):
                continue
            tokens.append(self.id_to_token(index))
        return tokens
