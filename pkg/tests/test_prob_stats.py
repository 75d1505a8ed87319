import numpy as np
import pytest

from conftest import tiny_model
from constraints.constraint_set import ConstraintSet
from evaluation.prob_stats import gold_probabilities, prob_stats
from training.loss import Example


def test_uniform_model_gives_one_over_vocab(cset):
    model = tiny_model(integrate_attention=False, integrate_output=False)
    model.params["out.W"].data[:] = 0.0
    examples = [Example.from_ids([4, 5], [9, 10, 7], cset), Example.from_ids([6], [11])]
    avg_all, avg_constrained = prob_stats(model, examples)
    assert avg_all == pytest.approx(1 / 12, rel=1e-5)
    assert avg_constrained == pytest.approx(1 / 12, rel=1e-5)


def test_no_constraint_positions_reports_none():
    model = tiny_model()
    avg_all, avg_constrained = prob_stats(model, [Example.from_ids([4, 5], [6, 7])])
    assert avg_constrained is None
    assert 0.0 < avg_all < 1.0


def test_gate_collapses_without_constraints():
    plain = tiny_model(integrate_output=False)
    gated = tiny_model(integrate_output=True)
    example = Example.from_ids([4, 5, 6], [7, 8], ConstraintSet())
    np.testing.assert_allclose(gold_probabilities(gated, example), gold_probabilities(plain, example), rtol=1e-5)
