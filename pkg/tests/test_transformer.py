import logging

import numpy as np
import pytest
from scipy import special

from conftest import tiny_model
from constraints.constraint_set import ConstraintPair, ConstraintSet
from errors import DimensionError
from model.transformer import ForwardTrace, gate_value
from numerics import tensor as T
from numerics.gradcheck import finite_diff_check

SOURCE = [4, 5, 6, 7]
TARGET_IN = [2, 9, 10, 8]


def test_rows_are_distributions(model, cset):
    probs = model.forward(SOURCE, TARGET_IN, cset).data
    assert probs.shape == (4, 12)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, rtol=1e-5)
    assert (probs >= 0).all()


def test_decoder_is_causal(model, cset):
    a = model.forward(SOURCE, TARGET_IN, cset).data
    b = model.forward(SOURCE, TARGET_IN[:2] + [5, 6], cset).data
    np.testing.assert_allclose(a[:2], b[:2], atol=1e-6)


def test_next_log_probs_matches_teacher_forcing(model, cset):
    probs = model.forward(SOURCE, TARGET_IN, cset).data
    context = model.start(SOURCE, cset)
    log_probs = model.next_log_probs(context, TARGET_IN[:3])
    assert log_probs.dtype == np.float64
    np.testing.assert_allclose(np.exp(log_probs), probs[2], atol=1e-5)


def test_trace_records_widened_memory(model, cset):
    trace = ForwardTrace()
    model.forward(SOURCE, TARGET_IN, cset, trace=trace)
    width = cset.source_length
    assert trace.attention["enc.0"][0].shape == (2, 4, width + 4)
    assert trace.attention["dec.0.cross"][0].shape == (2, 4, width + 4)
    assert trace.attention["dec.0.self"][0].shape == (2, 4, 4)
    assert len(trace.attention["cons.align"]) == 2
    assert len(trace.encoder_states) == 2
    assert trace.outputs.shape == (8, 4)


def test_empty_constraints_give_plain_softmax(model):
    with T.precision(np.float64):
        model.params = model.params.astype_current()
        h = model.decode(TARGET_IN, model.encode(SOURCE))
        probs = model.output_distribution(h, ConstraintSet.empty()).data
        expected = special.softmax(h.data.T @ model.params["out.W"].data, axis=1)
    np.testing.assert_allclose(probs, expected, atol=1e-10)


def test_vanilla_model_ignores_constraints(cset):
    vanilla = tiny_model(integrate_attention=False, integrate_output=False)
    a = vanilla.forward(SOURCE, TARGET_IN, cset).data
    b = vanilla.forward(SOURCE, TARGET_IN, ConstraintSet.empty()).data
    np.testing.assert_array_equal(a, b)
    assert vanilla.constraint_kv(cset) is None


def test_plug_in_only_on_constraint_tokens(model, cset):
    h = model.decode(TARGET_IN, model.encode(SOURCE))
    plug = model.plug_in(h, cset).data
    others = [k for k in range(12) if k not in (9, 10, 11)]
    assert np.all(plug[:, others] == 0)
    assert np.all((plug >= 0) & (plug <= 1 + 1e-6))


def test_gate_matrix_matches_single_gate(model):
    h = model.decode(TARGET_IN, model.encode(SOURCE))
    logits = model.gate_logits(h).data
    w_y = T.constant(model.params["embed"].data[9])
    h_t = T.constant(h.data[:, 2])
    single = gate_value(w_y, h_t, model.params).item()
    assert single == pytest.approx(special.expit(logits[2, 9]), abs=1e-6)


def test_mixture_mass_logged_at_debug(model, cset, caplog):
    with caplog.at_level(logging.DEBUG, logger="model.transformer"):
        model.forward(SOURCE, TARGET_IN, cset)
    assert "before renormalization" in caplog.text


def test_length_limits():
    short = tiny_model(max_len=3)
    with pytest.raises(DimensionError):
        short.encode([4, 5, 6, 7])
    with pytest.raises(DimensionError):
        short.encode([])


def test_gradients_through_whole_model(cset):
    model = tiny_model(seed=1, d=4, ffn_size=4, vocab_size=12)
    gold_rows = [0, 1, 2, 3]
    gold_cols = [9, 10, 8, 3]
    with T.precision(np.float64):
        model.params = model.params.astype_current()

        def fn(params):
            probs = model.forward(SOURCE, TARGET_IN, cset)
            return T.scale(T.sum_all(T.log(T.gather_entries(probs, gold_rows, gold_cols))), -1.0)

        report = finite_diff_check(fn, model.params.tensors, eps=1e-6, max_entries=4, seed=2)
    assert report.passed(1e-4), report.worst()


def _nll(model, cset):
    gold_rows = [0, 1, 2, 3]
    gold_cols = [9, 10, 8, 3]

    def fn(params):
        probs = model.forward(SOURCE, TARGET_IN, cset)
        return T.scale(T.sum_all(T.log(T.gather_entries(probs, gold_rows, gold_cols))), -1.0)
    return fn


@pytest.mark.parametrize("d", [8, 32])
def test_empty_constraint_memory_matches_vanilla_attention(d):
    rng = np.random.default_rng(d)
    for seed in range(10):
        model = tiny_model(seed=seed, d=d, ffn_size=2 * d)
        x_ids = rng.integers(4, 12, size=rng.integers(1, 9)).tolist()
        y_ids = [2] + rng.integers(4, 12, size=rng.integers(0, 8)).tolist()
        kv = model.constraint_kv(ConstraintSet())
        assert kv.width == 0
        with_kv = model.encode(x_ids, kv)
        without = model.encode(x_ids)
        np.testing.assert_allclose(with_kv.data, without.data, atol=1e-6)
        np.testing.assert_allclose(model.decode(y_ids, with_kv, kv).data, model.decode(y_ids, without).data,
                                   atol=1e-6)


def test_pair_order_does_not_change_outputs(model, cset):
    swapped = ConstraintSet(tuple(reversed(cset.pairs)))
    kv, kv_swapped = model.constraint_kv(cset), model.constraint_kv(swapped)
    encoded, encoded_swapped = model.encode(SOURCE, kv), model.encode(SOURCE, kv_swapped)
    np.testing.assert_allclose(encoded.data, encoded_swapped.data, atol=1e-5)
    np.testing.assert_allclose(model.decode(TARGET_IN, encoded, kv).data,
                               model.decode(TARGET_IN, encoded_swapped, kv_swapped).data, atol=1e-5)
    np.testing.assert_allclose(model.forward(SOURCE, TARGET_IN, cset).data,
                               model.forward(SOURCE, TARGET_IN, swapped).data, atol=1e-5)


def test_single_precision_gradients_with_one_constraint():
    model = tiny_model(seed=1)
    one = ConstraintSet((ConstraintPair((4, 5), (9, 10)),))
    report = finite_diff_check(_nll(model, one), model.params.tensors, eps=1e-2, max_entries=6)
    assert set(model.params.theta_c) <= set(report.checked)
    assert report.passed(1e-2), report.worst()


def test_every_constraint_tensor_gets_a_gradient():
    model = tiny_model(seed=1)
    one = ConstraintSet((ConstraintPair((4, 5), (9, 10)),))
    with T.Tape() as tape:
        loss = _nll(model, one)(model.params.tensors)
    grads = T.backward(tape, loss, model.params.theta_c)
    silent = [name for name, grad in grads.items() if not np.any(grad)]
    assert grads and not silent
