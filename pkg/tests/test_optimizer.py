import numpy as np
import pytest

from numerics.tensor import parameter, precision
from training.optimizer import OptimizerState, adam_update, clip_by_global_norm, lr_at_step


def test_first_adam_step_moves_by_lr_times_sign():
    with precision(np.float64):
        params = {"w": parameter(np.array([1.0, -2.0, 0.5]), "w")}
    state = OptimizerState.for_params(params)
    grads = {"w": np.array([0.3, -4.0, 0.0])}
    adam_update(params, grads, state, lr=0.1)
    np.testing.assert_allclose(params["w"].data, [0.9, -1.9, 0.5], atol=1e-6)
    assert state.steps["w"] == 1


def test_adam_matches_reference_over_steps():
    rng = np.random.default_rng(0)
    with precision(np.float64):
        params = {"w": parameter(rng.normal(size=4), "w")}
    reference = params["w"].data.copy()
    m = np.zeros(4)
    v = np.zeros(4)
    state = OptimizerState.for_params(params)
    for step in range(1, 6):
        g = rng.normal(size=4)
        adam_update(params, {"w": g}, state, lr=0.01)
        m = 0.9 * m + 0.1 * g
        v = 0.98 * v + 0.02 * g * g
        reference -= 0.01 * (m / (1 - 0.9 ** step)) / (np.sqrt(v / (1 - 0.98 ** step)) + 1e-9)
    np.testing.assert_allclose(params["w"].data, reference, rtol=1e-12)


def test_only_named_parameters_advance():
    params = {"a": parameter(np.ones(2), "a"), "b": parameter(np.ones(2), "b")}
    state = OptimizerState.for_params(params)
    grads = {"a": np.ones(2), "b": np.ones(2)}
    adam_update(params, grads, state, lr=0.1, names=["a"])
    np.testing.assert_array_equal(params["b"].data, [1, 1])
    assert state.steps == {"a": 1, "b": 0}
    assert state.step == 1


def test_gradient_shape_must_match():
    params = {"a": parameter(np.ones(2), "a")}
    with pytest.raises(ValueError):
        adam_update(params, {"a": np.ones(3)}, OptimizerState(), lr=0.1)


def test_schedule_peaks_at_warmup():
    d, warmup = 64, 400
    assert lr_at_step(warmup, d, warmup) == pytest.approx(d ** -0.5 * warmup ** -0.5)
    assert lr_at_step(100, d, warmup) < lr_at_step(400, d, warmup)
    assert lr_at_step(1600, d, warmup) == pytest.approx(lr_at_step(400, d, warmup) / 2)
    with pytest.raises(ValueError):
        lr_at_step(0, d, warmup)


def test_clip_by_global_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert clip_by_global_norm(grads, 1.0) == pytest.approx(5.0)
    np.testing.assert_allclose(grads["a"], [0.6])
    untouched = {"a": np.array([0.3])}
    clip_by_global_norm(untouched, None)
    np.testing.assert_allclose(untouched["a"], [0.3])
