import logging

import pytest

from datapipe.bpe import debpe
from datapipe.corpus_io import PhraseConstraint
from errors import DataError
from evaluation.csr import csr, csr_details


def test_half_of_the_constraints_met():
    assert csr([["x", "a", "b", "y"]], [["a b", "c"]]) == 50.0


def test_phrase_constraints_and_order_invariance():
    hyps = [["x", "a", "b"], ["c", "d"]]
    records = [[PhraseConstraint(("1",), ("a", "b")), PhraseConstraint(("2",), ("q",))],
               [PhraseConstraint(("3",), ("d",))]]
    forward = csr(hyps, records)
    backward = csr(hyps[::-1], [list(reversed(r)) for r in records[::-1]])
    assert forward == backward == pytest.approx(200 / 3)
    assert [(d.total, d.met) for d in csr_details(hyps, records)] == [(2, 1), (1, 1)]


def test_word_level_matching_needs_debpe():
    subwords = ["乐@@", "团", "演出"]
    assert csr([subwords], [["乐团"]]) == 0.0
    assert csr([debpe(subwords)], [["乐团"]]) == 100.0


def test_no_constraints_is_100_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        assert csr([["a"]], [[]]) == 100.0
    assert "no constraints" in caplog.text


def test_length_mismatch():
    with pytest.raises(DataError):
        csr([["a"]], [])
