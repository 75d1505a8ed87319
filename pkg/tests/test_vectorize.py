import numpy as np

from constraints.constraint_set import ConstraintPair, ConstraintSet
from constraints.vectorize import build_constraint_kv, embed_phrase, empty_kv, vectorize_constraints
from model.attention import positional_encoding
from model.config import ModelConfig
from model.params import ModelParams
from numerics import tensor as T


def _params():
    config = ModelConfig(vocab_size=20, d=8, heads=2, enc_layers=1, dec_layers=1, ffn_size=8, dropout=0.0)
    return ModelParams.initialize(config, seed=0)


def test_phrase_positions_restart_at_zero():
    params = _params()
    out = embed_phrase([5, 6], params["embed"])
    expected = params["embed"].data[[5, 6]].T + positional_encoding(2, 8)
    np.testing.assert_allclose(out.data, expected, atol=1e-5)


def test_vectorize_shapes():
    params = _params()
    cset = ConstraintSet((ConstraintPair((4, 5), (6,)), ConstraintPair((7,), (8, 9, 10))))
    vectors = vectorize_constraints(cset, params["embed"])
    assert [(s.shape, t.shape) for s, t in vectors] == [((8, 2), (8, 1)), ((8, 1), (8, 3))]


def test_keys_values_width_and_blocks():
    params = _params()
    cset = ConstraintSet((ConstraintPair((4, 5), (6,)), ConstraintPair((7,), (8, 9))))
    record = []
    kv = build_constraint_kv(cset, params, record=record)
    assert kv.width == 3
    assert kv.boundaries == ((0, 2), (2, 3))
    assert kv.values.shape == (8, 3)
    assert [r.shape for r in record] == [(2, 2, 1), (2, 1, 2)]


def test_pairs_do_not_interact():
    params = _params()
    a, b = ConstraintPair((4, 5), (6,)), ConstraintPair((7,), (8, 9))
    with T.precision(np.float64):
        wide = params.astype_current()
        forward = build_constraint_kv(ConstraintSet((a, b)), wide)
        reverse = build_constraint_kv(ConstraintSet((b, a)), wide)
    for n, m in ((0, 1), (1, 0)):
        k1, v1 = forward.block(n)
        k2, v2 = reverse.block(m)
        np.testing.assert_allclose(k1, k2, atol=1e-12)
        np.testing.assert_allclose(v1, v2, atol=1e-12)


def test_single_target_token_value_is_its_projection():
    params = _params()
    with T.precision(np.float64):
        wide = params.astype_current()
        kv = build_constraint_kv(ConstraintSet((ConstraintPair((4, 5), (6,)),)), wide)
        t_vec = embed_phrase([6], wide["embed"]).data
    projected = wide["cons.align.o"].data @ wide["cons.align.v"].data @ t_vec
    np.testing.assert_allclose(kv.values.data, np.repeat(projected, 2, axis=1), atol=1e-10)


def test_empty_set_gives_zero_width():
    params = _params()
    kv = build_constraint_kv(ConstraintSet.empty(), params)
    assert kv.keys.shape == (8, 0) and kv.values.shape == (8, 0)
    assert empty_kv(8).width == 0
