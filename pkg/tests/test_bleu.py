import pytest

from errors import DataError
from evaluation.bleu import corpus_bleu, corpus_statistics, ngrams

HYPS = ["the cat sat on the mat", "a dog ran", "it is here now"]
REFS = ["the cat sat on a mat", "a dog ran fast", "it is not here now"]


def _split(lines):
    return [line.split() for line in lines]


def test_ngram_counts():
    counts = ngrams("a b a b".split(), 2)
    assert counts[("a", "b")] == 2
    assert sum(counts.values()) == 3


def test_identity_is_100():
    assert corpus_bleu(_split(REFS), _split(REFS)) == 100.0


def test_three_sentence_fixture_against_hand_count():
    matches, totals, hyp_len, ref_len = corpus_statistics(_split(HYPS), _split(REFS))
    assert matches == [12, 7, 3, 1]
    assert totals == [13, 10, 7, 4]
    assert (hyp_len, ref_len) == (13, 15)
    assert corpus_bleu(_split(HYPS), _split(REFS)) == pytest.approx(43.98, abs=0.01)


def test_zero_overlap_is_small_but_positive():
    hyp = [[f"h{k}" for k in range(32)]]
    ref = [[f"r{k}" for k in range(32)]]
    score = corpus_bleu(hyp, ref)
    assert 0.0 < score < 1.0


def test_brevity_penalty_applies():
    full = corpus_bleu([["a", "b", "c", "d", "e"]], [["a", "b", "c", "d", "e"]])
    short = corpus_bleu([["a", "b", "c", "d"]], [["a", "b", "c", "d", "e"]])
    assert short < full


def test_degenerate_inputs():
    with pytest.raises(DataError):
        corpus_bleu([], [])
    with pytest.raises(DataError):
        corpus_bleu([["a"]], [])
    assert corpus_bleu([[]], [["a", "b"]]) == 0.0


def test_identity_of_short_sentences_is_100():
    short = [["a", "b"], ["c"]]
    assert corpus_bleu(short, short) == 100.0
