import struct

import numpy as np
import pytest

from conftest import tiny_config
from errors import CheckpointCompatibilityError, CheckpointFormatError
from model.params import ModelParams
from training.checkpoint import MAGIC, load_checkpoint, read_checkpoint_tensors, save_checkpoint
from training.optimizer import OptimizerState, adam_update


@pytest.fixture
def saved(tmp_path):
    config = tiny_config()
    params = ModelParams.initialize(config, seed=0)
    state = OptimizerState.for_params(params.tensors)
    grads = {name: np.ones_like(t.data) for name, t in params.theta_v.items()}
    adam_update(params.tensors, grads, state, lr=0.01)
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, state, path)
    return config, params, state, path


def test_reload_restores_parameters_and_optimizer(saved):
    config, params, state, path = saved
    loaded, loaded_state = load_checkpoint(path, config)
    assert loaded.checksum() == params.checksum()
    assert loaded_state.steps == state.steps
    np.testing.assert_array_equal(loaded_state.m["embed"], state.m["embed"])
    assert loaded_state.steps["cons.align.q"] == 0


def test_parameters_only_checkpoint(tmp_path):
    config = tiny_config()
    path = tmp_path / "bare.ckpt"
    save_checkpoint(ModelParams.initialize(config, seed=1), None, path)
    _, state = load_checkpoint(path, config)
    assert state is None


def test_header_layout(saved):
    _, _, _, path = saved
    data = path.read_bytes()
    assert data[:6] == MAGIC
    version, count = struct.unpack("<BI", data[6:11])
    assert version == 1
    assert count == len(read_checkpoint_tensors(path))


def test_bad_magic(saved):
    _, _, _, path = saved
    path.write_bytes(b"XXXXXX" + path.read_bytes()[6:])
    with pytest.raises(CheckpointFormatError, match="magic"):
        read_checkpoint_tensors(path)


def test_bad_version(saved):
    _, _, _, path = saved
    data = bytearray(path.read_bytes())
    data[6] = 9
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointFormatError, match="version"):
        read_checkpoint_tensors(path)


@pytest.mark.parametrize("cut", [3, 11, 200])
def test_truncation_detected(saved, cut):
    _, _, _, path = saved
    path.write_bytes(path.read_bytes()[:-cut] if cut > 100 else path.read_bytes()[:cut])
    with pytest.raises(CheckpointFormatError):
        read_checkpoint_tensors(path)


def test_trailing_bytes_detected(saved):
    _, _, _, path = saved
    path.write_bytes(path.read_bytes() + b"\0")
    with pytest.raises(CheckpointFormatError, match="trailing"):
        read_checkpoint_tensors(path)


def test_incompatible_configuration_names_the_tensor(saved):
    _, _, _, path = saved
    with pytest.raises(CheckpointCompatibilityError, match="embed"):
        load_checkpoint(path, tiny_config(vocab_size=13))
    with pytest.raises(CheckpointCompatibilityError, match="enc.1"):
        load_checkpoint(path, tiny_config(enc_layers=2))
