"""
Binary checkpoint format.

    magic      6 bytes  b"VCNMT1"
    version    uint8    1
    count      uint32   number of tensor records
    records    uint32 name length, UTF-8 name, uint8 rank, rank x uint32 dims,
               little-endian float32 data in row-major order

Model tensors keep their parameter names. Optimizer state is stored as
"adam.m/<name>", "adam.v/<name>" and "adam.step/<name>" records.
"""
from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from errors import CheckpointCompatibilityError, CheckpointFormatError
from model.config import ModelConfig
from model.params import ModelParams, parameter_shapes
from numerics.tensor import parameter
from training.optimizer import OptimizerState

logger = logging.getLogger(__name__)

MAGIC = b"VCNMT1"
VERSION = 1
FLOAT = np.dtype("<f4")
OPTIMIZER_PREFIXES = ("adam.m/", "adam.v/", "adam.step/")


def _encode_record(name, array):
    array = np.ascontiguousarray(array, dtype=FLOAT)
    encoded = name.encode("utf-8")
    head = struct.pack("<I", len(encoded)) + encoded + struct.pack("<B", array.ndim)
    head += struct.pack(f"<{array.ndim}I", *array.shape)
    return head + array.tobytes()


def _records(params: ModelParams, state: Optional[OptimizerState]):
    records = [(name, tensor.data) for name, tensor in params.tensors.items()]
    if state is not None:
        for name in params.tensors:
            if name in state.m:
                records.append((f"adam.m/{name}", state.m[name]))
                records.append((f"adam.v/{name}", state.v[name]))
                records.append((f"adam.step/{name}", np.array([state.steps[name]])))
    return records


def save_checkpoint(params: ModelParams, state: Optional[OptimizerState], path):
    records = _records(params, state)
    payload = [MAGIC, struct.pack("<BI", VERSION, len(records))]
    payload.extend(_encode_record(name, array) for name, array in records)
    Path(path).write_bytes(b"".join(payload))
    logger.info("saved checkpoint with %d tensors to %s", len(records), path)


class _Reader:
    def __init__(self, data, path):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, size):
        if self.offset + size > len(self.data):
            raise CheckpointFormatError(f"{self.path}: truncated at byte {self.offset}")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_checkpoint_tensors(path) -> Dict[str, np.ndarray]:
    """Every record as a float32 array; the whole file is validated before anything is returned."""
    reader = _Reader(Path(path).read_bytes(), path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointFormatError(f"{path}: not a checkpoint (bad magic)")
    version, count = reader.unpack("<BI")
    if version != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported checkpoint version {version}")
    tensors = {}
    for _ in range(count):
        (name_length,) = reader.unpack("<I")
        try:
            name = reader.take(name_length).decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointFormatError(f"{path}: tensor name is not UTF-8") from e
        (rank,) = reader.unpack("<B")
        shape = reader.unpack(f"<{rank}I")
        size = int(np.prod(shape, dtype=np.int64)) if rank else 1
        tensors[name] = np.frombuffer(reader.take(size * FLOAT.itemsize), dtype=FLOAT).reshape(shape).copy()
    if reader.offset != len(reader.data):
        raise CheckpointFormatError(f"{path}: {len(reader.data) - reader.offset} trailing bytes")
    return tensors


def load_checkpoint(path, config: ModelConfig):
    """ModelParams for `config` and the optimizer state (None when the file carries none)."""
    tensors = read_checkpoint_tensors(path)
    expected = parameter_shapes(config)
    for name, shape in expected.items():
        if name not in tensors:
            raise CheckpointCompatibilityError(f"{path}: tensor {name} missing from checkpoint")
        if tensors[name].shape != tuple(shape):
            raise CheckpointCompatibilityError(
                f"{path}: tensor {name} has shape {tensors[name].shape}, configuration expects {tuple(shape)}")
    unknown = [n for n in tensors if n not in expected and not n.startswith(OPTIMIZER_PREFIXES)]
    if unknown:
        raise CheckpointCompatibilityError(f"{path}: tensor {unknown[0]} is not part of this configuration")
    params = ModelParams(config, {name: parameter(tensors[name], name) for name in expected})
    state = None
    if any(n.startswith("adam.") for n in tensors):
        state = OptimizerState()
        for name in expected:
            if f"adam.m/{name}" in tensors:
                state.m[name] = tensors[f"adam.m/{name}"]
                state.v[name] = tensors[f"adam.v/{name}"]
                state.steps[name] = int(tensors[f"adam.step/{name}"][0])
    return params, state
