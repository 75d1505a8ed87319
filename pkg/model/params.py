"""
Named parameter tensors of the constraint-aware Transformer.

Every tensor whose name starts with CONSTRAINT_PREFIX belongs to the
constraint path (aligner, adapters, gate); everything else is the vanilla
Transformer. The two subsets are disjoint and together cover all tensors.
"""
from __future__ import annotations

import hashlib
from typing import Dict, Iterator

import numpy as np

from model.config import ModelConfig
from numerics.tensor import Tensor, current_dtype, parameter

CONSTRAINT_PREFIX = "cons."
GATE_INIT_STD = 0.01


def _xavier(rng, rows, cols):
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def _attention_shapes(prefix, d):
    return {f"{prefix}.{part}": (d, d) for part in ("q", "k", "v", "o")}


def _norm_shapes(prefix, d):
    return {f"{prefix}.gain": (d,), f"{prefix}.bias": (d,)}


def _ffn_shapes(prefix, d, hidden):
    return {f"{prefix}.w1": (hidden, d), f"{prefix}.b1": (hidden,), f"{prefix}.w2": (d, hidden), f"{prefix}.b2": (d,)}


def parameter_shapes(config: ModelConfig) -> Dict[str, tuple]:
    """Name -> shape of every tensor the configuration owns, in a fixed order."""
    d, f = config.d, config.ffn_size
    shapes = {"embed": (config.vocab_size, d), "out.W": (d, config.vocab_size)}
    for i in range(config.enc_layers):
        shapes.update(_norm_shapes(f"enc.{i}.ln1", d))
        shapes.update(_attention_shapes(f"enc.{i}.attn", d))
        shapes.update(_norm_shapes(f"enc.{i}.ln2", d))
        shapes.update(_ffn_shapes(f"enc.{i}.ffn", d, f))
    shapes.update(_norm_shapes("enc.ln", d))
    for j in range(config.dec_layers):
        shapes.update(_norm_shapes(f"dec.{j}.ln1", d))
        shapes.update(_attention_shapes(f"dec.{j}.self", d))
        shapes.update(_norm_shapes(f"dec.{j}.ln2", d))
        shapes.update(_attention_shapes(f"dec.{j}.cross", d))
        shapes.update(_norm_shapes(f"dec.{j}.ln3", d))
        shapes.update(_ffn_shapes(f"dec.{j}.ffn", d, f))
    shapes.update(_norm_shapes("dec.ln", d))

    shapes.update(_attention_shapes("cons.align", d))
    for side, count in (("enc", config.enc_layers), ("dec", config.dec_layers)):
        for layer in range(count):
            for role in ("key", "value"):
                shapes.update(_ffn_shapes(f"cons.{side}.{layer}.{role}", d, d))
    shapes.update({"cons.gate.w1": (d, d), "cons.gate.w2": (d, d), "cons.gate.w3": (2 * d, 1)})
    return shapes


def _initial_value(name, shape, rng):
    if name == "embed":
        return rng.normal(0.0, 1.0, size=shape)
    if name.startswith("cons.gate."):
        return rng.normal(0.0, GATE_INIT_STD, size=shape)
    if name.endswith(".gain"):
        return np.ones(shape)
    if len(shape) == 1:
        return np.zeros(shape)
    return _xavier(rng, *shape)


class ModelParams:
    def __init__(self, config: ModelConfig, tensors: Dict[str, Tensor]):
        expected = parameter_shapes(config)
        missing = expected.keys() - tensors.keys()
        if missing:
            raise KeyError(f"missing parameter tensors: {sorted(missing)}")
        self.config = config
        self.tensors = {name: tensors[name] for name in expected}

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int):
        rng = np.random.default_rng(seed)
        tensors = {name: parameter(_initial_value(name, shape, rng), name)
                   for name, shape in parameter_shapes(config).items()}
        return cls(config, tensors)

    def __getitem__(self, name) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self):
        return len(self.tensors)

    @property
    def theta_v(self):
        return {n: t for n, t in self.tensors.items() if not n.startswith(CONSTRAINT_PREFIX)}

    @property
    def theta_c(self):
        return {n: t for n, t in self.tensors.items() if n.startswith(CONSTRAINT_PREFIX)}

    def subset(self, which):
        if which == "all":
            return dict(self.tensors)
        if which == "vanilla":
            return self.theta_v
        if which == "constraint":
            return self.theta_c
        raise ValueError(f"unknown parameter subset {which!r}")

    def copy(self):
        tensors = {name: parameter(t.data.copy(), name) for name, t in self.tensors.items()}
        return ModelParams(self.config, tensors)

    def checksum(self, which="all"):
        """SHA-256 over names and raw bytes, used to prove a subset was left untouched."""
        digest = hashlib.sha256()
        for name, tensor in self.subset(which).items():
            digest.update(name.encode("utf-8"))
            digest.update(np.ascontiguousarray(tensor.data).tobytes())
        return digest.hexdigest()

    def astype_current(self):
        """Re-materialize every tensor in the active precision (see numerics.tensor.precision)."""
        dtype = current_dtype()
        return ModelParams(self.config, {n: parameter(t.data.astype(dtype), n) for n, t in self.tensors.items()})
