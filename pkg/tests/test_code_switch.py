import pytest

from datapipe.code_switch import code_switch_corpus, locate_phrases
from datapipe.corpus_io import ParallelCorpus, PhraseConstraint
from errors import DataError


def test_locate_skips_taken_positions():
    target = ["x", "y", "x", "y"]
    assert locate_phrases(target, [("x", "y"), ("x", "y"), ("y",)]) == [0, 2, None]


def test_locate_backtracks_around_repeated_words():
    assert locate_phrases(["x", "y", "x"], [("x",), ("x", "y")]) == [2, 0]


def test_probability_one_switches_everything():
    corpus = ParallelCorpus([("a", "b", "c")], [("x", "y", "z")])
    constraints = [[PhraseConstraint(("c",), ("z",)), PhraseConstraint(("a", "b"), ("x", "y"))]]
    switched, records = code_switch_corpus(corpus, constraints, seed=0, probability=1.0)
    assert switched.targets == [("a", "b", "c")]
    assert records == [[PhraseConstraint(("c",), ("c",)), PhraseConstraint(("a", "b"), ("a", "b"))]]
    assert switched.alignments is None


def test_probability_zero_keeps_corpus():
    corpus = ParallelCorpus([("a", "b")], [("x", "y")])
    constraints = [[PhraseConstraint(("a",), ("x",))]]
    switched, records = code_switch_corpus(corpus, constraints, seed=0, probability=0.0)
    assert switched.targets == corpus.targets
    assert records == constraints


def test_replacement_length_may_differ():
    corpus = ParallelCorpus([("a", "b")], [("x", "y", "w")])
    constraints = [[PhraseConstraint(("b",), ("y", "w")), PhraseConstraint(("a",), ("x",))]]
    switched, _ = code_switch_corpus(corpus, constraints, seed=0, probability=1.0)
    assert switched.targets == [("a", "b")]


def test_missing_phrase_and_count_mismatch():
    corpus = ParallelCorpus([("a",)], [("x",)])
    with pytest.raises(DataError, match="sentence 0"):
        code_switch_corpus(corpus, [[PhraseConstraint(("a",), ("q",))]], seed=0)
    with pytest.raises(DataError):
        code_switch_corpus(corpus, [], seed=0)


def test_seeded_and_reproducible():
    corpus = ParallelCorpus([("a", "b", "c")] * 10, [("x", "y", "z")] * 10)
    constraints = [[PhraseConstraint(("a",), ("x",)), PhraseConstraint(("c",), ("z",))]] * 10
    first = code_switch_corpus(corpus, constraints, seed=4)
    second = code_switch_corpus(corpus, constraints, seed=4)
    assert first[0].targets == second[0].targets
    assert first[1] == second[1]
