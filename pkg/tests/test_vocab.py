import pytest

from datapipe.vocab import BOS_ID, EOS_ID, PAD_ID, UNK_ID, Vocabulary
from errors import VocabularyError


def test_specials_are_reserved_first():
    vocab = Vocabulary(["b", "a", "<s>"])
    assert vocab.tokens[:4] == ("<pad>", "<unk>", "<s>", "</s>")
    assert (PAD_ID, UNK_ID, BOS_ID, EOS_ID) == (0, 1, 2, 3)
    assert len(vocab) == 6
    assert vocab.token_to_id("b") == 4


def test_encode_unknown_modes():
    vocab = Vocabulary(["a"])
    assert vocab.encode(["a", "z"]) == [4, UNK_ID]
    with pytest.raises(VocabularyError):
        vocab.encode(["z"], on_unknown="error")


def test_decode_strips_specials():
    vocab = Vocabulary(["a", "b"])
    assert vocab.decode([BOS_ID, 4, PAD_ID, 5, EOS_ID]) == ["a", "b"]
    assert vocab.decode([UNK_ID]) == ["<unk>"]
    assert vocab.decode([BOS_ID], strip_specials=False) == ["<s>"]


def test_id_out_of_range():
    with pytest.raises(VocabularyError):
        Vocabulary([]).id_to_token(4)


def test_duplicates_rejected_and_equality():
    with pytest.raises(VocabularyError):
        Vocabulary(["a", "a"])
    assert Vocabulary(["a"]) == Vocabulary(["a"])
    assert Vocabulary(["a"]) != Vocabulary(["b"])
