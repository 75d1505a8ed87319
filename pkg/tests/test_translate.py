import pytest

from conftest import tiny_model
from constraints.constraint_set import ConstraintPair, ConstraintSet
from datapipe.bpe import apply_bpe, debpe, learn_bpe
from datapipe.corpus_io import PhraseConstraint
from decoding.translate import translate_corpus, translate_sentence
from evaluation.csr import csr
from fake_models import TableModel
from model.transformer import ConstrainedTransformer

SOURCES = [[4, 5], [6], [4, 6, 5], [5, 5, 5, 4]]


def test_thread_pool_keeps_order_and_results():
    model = TableModel(seed=3, eos_bias=1.0)
    csets = [ConstraintSet((ConstraintPair((4,), (6,)),))] * len(SOURCES)
    serial = translate_corpus(model, SOURCES, csets, workers=1)
    pooled = translate_corpus(model, SOURCES, csets, workers=3)
    assert [r.hypothesis.tokens for r in serial] == [r.hypothesis.tokens for r in pooled]
    assert all(r.constraints_met for r in serial)


def test_beam_decoder_and_default_constraints():
    model = TableModel(seed=1, eos_bias=1.0)
    results = translate_corpus(model, SOURCES, decoder="beam", beam_size=2)
    assert len(results) == len(SOURCES)
    assert all(r.excluded == () for r in results)


def test_unknown_decoder_and_count_mismatch():
    model = TableModel()
    with pytest.raises(ValueError):
        translate_sentence(model, [4], ConstraintSet(), decoder="greedy")
    with pytest.raises(ValueError):
        translate_corpus(model, SOURCES, [ConstraintSet()])


def test_constrained_model_translates(model, cset):
    result = translate_sentence(model, [4, 5, 6], cset, decoder="vdba", beam_size=2, max_len=8)
    assert result.constraints_met
    tokens = result.hypothesis.output_tokens(model.eos_id)
    assert 11 in tokens and 9 in tokens


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_word_level_copying_is_complete_with_subword_vocabulary(seed):
    corpus = [["focat", "cat", "dog"], ["fodog", "catdog", "cat"], ["dogcat", "fo", "do"]] * 3
    bpe = learn_bpe(corpus, 6)
    model = tiny_model(seed=seed, vocab_size=len(bpe.vocab))
    model = ConstrainedTransformer(model.params, bpe.word_internal_ids)
    phrases = [[PhraseConstraint(("dog",), ("cat",))], [PhraseConstraint(("fo",), ("dog",)),
                                                       PhraseConstraint(("cat",), ("catdog",))]]
    sources = [bpe.vocab.encode(apply_bpe(bpe, ["fodog", "dog"])), bpe.vocab.encode(apply_bpe(bpe, ["fo", "cat"]))]
    csets = [ConstraintSet.from_phrases(record, bpe) for record in phrases]
    results = translate_corpus(model, sources, csets, decoder="vdba", beam_size=3)
    hypotheses = [debpe(bpe.vocab.decode(r.hypothesis.output_tokens(model.eos_id))) for r in results]
    assert all(r.constraints_met for r in results)
    assert csr(hypotheses, phrases) == 100.0
