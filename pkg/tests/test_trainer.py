import numpy as np
import pytest

from conftest import tiny_model
from constraints.constraint_set import ConstraintPair, ConstraintSet
from errors import ConfigError, DataError
from training.metrics_log import MetricsLog, read_metrics
from training.trainer import (BatchPrefetcher, TrainConfig, Trainer, assemble_batch, build_examples, step_rngs,
                              train)

SOURCES = [[4, 5, 6], [7, 8], [5, 4, 9], [6, 7, 8, 9]]
TARGETS = [[9, 10, 11], [4, 5], [10, 9, 6], [11, 4, 5, 6]]
CONSTRAINTS = [ConstraintSet((ConstraintPair((4,), (9,)),)), ConstraintSet(),
               ConstraintSet((ConstraintPair((9,), (6,)),)), ConstraintSet((ConstraintPair((6, 7), (11, 4)),))]


def _examples():
    return build_examples(SOURCES, TARGETS, CONSTRAINTS)


def _config(**kwargs):
    settings = dict(seed=7, warmup_steps=10, stage1_steps=6, stage2_steps=4, batch_tokens=8, log_interval=3)
    settings.update(kwargs)
    return TrainConfig(**settings)


def test_default_loss_weights_follow_decoder():
    assert _config().loss_weights == (0.5, 0.5)
    assert _config(decoder="beam").loss_weights == (0.8, 0.2)
    assert _config(alpha=0.9).loss_weights == (0.9, 0.5)


@pytest.mark.parametrize("kwargs", [{"alpha": -1.0}, {"alpha": 0.0, "beta": 0.0}, {"label_smoothing": 1.0},
                                    {"warmup_steps": 0}, {"batch_tokens": 0}])
def test_invalid_train_config(kwargs):
    with pytest.raises(ConfigError):
        _config(**kwargs)


def test_build_examples_checks_counts():
    with pytest.raises(DataError):
        build_examples(SOURCES, TARGETS[:2])
    with pytest.raises(DataError):
        build_examples(SOURCES, TARGETS, CONSTRAINTS[:1])
    assert all(len(e.constraints) == 0 for e in build_examples(SOURCES, TARGETS))


def test_batches_respect_token_budget():
    examples = _examples()
    batch = assemble_batch(examples, 8, step_rngs(1, 1)[0])
    assert sum(e.tokens for e in batch) >= 8 or len(batch) == len(examples)
    assert len(assemble_batch(examples, 1, step_rngs(1, 1)[0])) == 1


def test_stage_one_leaves_constraint_path_untouched():
    model = tiny_model()
    before_c = model.params.checksum("constraint")
    before_v = model.params.checksum("vanilla")
    train(_config(stage2_steps=0, deterministic=True), model, _examples())
    assert model.params.checksum("constraint") == before_c
    assert model.params.checksum("vanilla") != before_v


def test_stage_two_trains_constraint_path():
    model = tiny_model()
    before = model.params.checksum("constraint")
    _, state, history = train(_config(deterministic=True), model, _examples())
    assert model.params.checksum("constraint") != before
    assert [r.stage for r in history] == [1] * 6 + [2] * 4
    assert [r.step for r in history] == list(range(1, 11))
    assert state.steps["embed"] == 10
    assert state.steps["cons.gate.w1"] == 4


def test_deterministic_runs_repeat_exactly():
    first = train(_config(deterministic=True), tiny_model(), _examples())[2]
    second = train(_config(deterministic=True), tiny_model(), _examples())[2]
    assert [r.loss for r in first] == [r.loss for r in second]


def test_prefetching_sees_the_same_batches():
    serial = train(_config(deterministic=True), tiny_model(), _examples())[2]
    threaded = train(_config(deterministic=False), tiny_model(), _examples())[2]
    np.testing.assert_allclose([r.loss for r in serial], [r.loss for r in threaded])


def test_loss_goes_down_on_a_tiny_corpus():
    config = _config(stage1_steps=40, stage2_steps=0, lr_scale=0.2, label_smoothing=0.0, deterministic=True,
                     batch_tokens=100)
    history = train(config, tiny_model(), _examples())[2]
    losses = [r.loss for r in history]
    assert np.mean(losses[-5:]) < np.mean(losses[:5])


def test_metrics_log_gets_interval_means(tmp_path):
    path = tmp_path / "metrics.tsv"
    with MetricsLog(path) as metrics:
        Trainer(_config(deterministic=True), tiny_model(), _examples(), metrics).run()
    frame = read_metrics(path)
    assert frame["step"].tolist() == [3, 6, 9, 10]
    assert frame["stage"].tolist() == [1, 1, 2, 2]
    assert (frame["lr"] > 0).all()


def test_empty_corpus_rejected():
    with pytest.raises(DataError):
        Trainer(_config(), tiny_model(), [])


def test_prefetch_failure_reaches_the_consumer():
    prefetcher = BatchPrefetcher([object()], range(1, 4), 10, seed=0)
    try:
        with pytest.raises(AttributeError):
            prefetcher.get()
    finally:
        prefetcher.close()
