"""
Dense tensors with reverse-mode automatic differentiation.

Every op is a plain function that computes its result with numpy and, when a
Tape is active and one of its inputs requires a gradient, appends a node to
the tape holding the local backward function. `backward` replays the tape in
reverse. Sentence matrices use the column layout of the model equations:
d x L, one column per position.
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np
from scipy import special

from errors import DimensionError, NumericsError, VocabularyError

MAX_RANK = 3
LOG_FLOOR = 1e-30

_DTYPE = contextvars.ContextVar("numerics_dtype", default=np.float32)
_ACTIVE_TAPE = contextvars.ContextVar("numerics_tape", default=None)


def current_dtype():
    return _DTYPE.get()


@contextlib.contextmanager
def precision(dtype):
    """Switch the working float type (np.float32 or np.float64) for tensors created inside the block."""
    token = _DTYPE.set(np.dtype(dtype).type)
    try:
        yield
    finally:
        _DTYPE.reset(token)


class Tensor:
    __slots__ = ("data", "trainable", "name", "requires_grad")

    def __init__(self, data, *, trainable=False, name=None):
        self.data = np.array(data, dtype=current_dtype())
        if self.data.ndim > MAX_RANK:
            raise DimensionError(f"rank {self.data.ndim} exceeds the rank-{MAX_RANK} contract: {self.data.shape}")
        self.trainable = trainable
        self.name = name
        self.requires_grad = trainable

    @classmethod
    def _from_op(cls, data, requires_grad):
        out = cls.__new__(cls)
        out.data = data
        out.trainable = False
        out.name = None
        out.requires_grad = requires_grad
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def rank(self):
        return self.data.ndim

    def item(self):
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.data.dtype})"


def constant(data):
    return Tensor(data)


def parameter(data, name):
    return Tensor(data, trainable=True, name=name)


@dataclass(frozen=True)
class Node:
    output: Tensor
    inputs: tuple
    grad_fn: Callable[[np.ndarray], tuple]
    op: str


class Tape:
    """Append-only record of the ops executed while it is active."""

    def __init__(self):
        self.nodes = []
        self._token = None

    def __enter__(self):
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPE.reset(self._token)
        self._token = None
        return False

    def __len__(self):
        return len(self.nodes)

    def produced(self, tensor):
        return any(node.output is tensor for node in self.nodes)


def _record(op, data, inputs, grad_fn):
    tape = _ACTIVE_TAPE.get()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._from_op(data, needs)
    if needs:
        tape.nodes.append(Node(out, tuple(inputs), grad_fn, op))
    return out


def _check_same_shape(op, a, b):
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} are not broadcast-compatible")


def _swap_last(x):
    return np.swapaxes(x, -1, -2)


# --- linear algebra ---------------------------------------------------------

def matmul(a, b):
    """Matrix product of rank-2 operands, or batched product of rank-3 operands with equal batch size."""
    if a.rank != b.rank or a.rank not in (2, 3) or a.shape[-1] != b.shape[-2] or a.shape[:-2] != b.shape[:-2]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    out = np.matmul(a.data, b.data)

    def grad_fn(g):
        return np.matmul(g, _swap_last(b.data)), np.matmul(_swap_last(a.data), g)

    return _record("matmul", out, (a, b), grad_fn)


def transpose(a):
    if a.rank < 2:
        raise DimensionError(f"transpose needs rank >= 2, got {a.shape}")
    out = np.ascontiguousarray(_swap_last(a.data))

    def grad_fn(g):
        return (_swap_last(g),)

    return _record("transpose", out, (a,), grad_fn)


def reshape(a, shape):
    shape = tuple(shape)
    if int(np.prod(shape)) != a.data.size or len(shape) > MAX_RANK:
        raise DimensionError(f"reshape: cannot view {a.shape} as {shape}")
    out = a.data.reshape(shape)

    def grad_fn(g):
        return (g.reshape(a.shape),)

    return _record("reshape", out, (a,), grad_fn)


def slice_rows(a, start, stop):
    if a.rank != 2 or not 0 <= start <= stop <= a.shape[0]:
        raise DimensionError(f"slice_rows: [{start}:{stop}] out of range for {a.shape}")
    out = a.data[start:stop].copy()

    def grad_fn(g):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        return (full,)

    return _record("slice_rows", out, (a,), grad_fn)


# --- elementwise ------------------------------------------------------------

def add(a, b):
    """a + b for equal shapes, or tensor plus Python scalar."""
    if not isinstance(b, Tensor):
        shift = float(b)

        def grad_scalar(g):
            return (g,)

        return _record("add", a.data + a.data.dtype.type(shift), (a,), grad_scalar)
    _check_same_shape("add", a, b)

    def grad_fn(g):
        return g, g

    return _record("add", a.data + b.data, (a, b), grad_fn)


def sub(a, b):
    _check_same_shape("sub", a, b)

    def grad_fn(g):
        return g, -g

    return _record("sub", a.data - b.data, (a, b), grad_fn)


def mul(a, b):
    """Elementwise product for equal shapes; a Python scalar falls back to scale."""
    if not isinstance(b, Tensor):
        return scale(a, b)
    _check_same_shape("mul", a, b)

    def grad_fn(g):
        return g * b.data, g * a.data

    return _record("mul", a.data * b.data, (a, b), grad_fn)


def scale(a, factor):
    factor = a.data.dtype.type(factor)

    def grad_fn(g):
        return (g * factor,)

    return _record("scale", a.data * factor, (a,), grad_fn)


def relu(a):
    positive = a.data > 0
    out = np.where(positive, a.data, a.data.dtype.type(0))

    def grad_fn(g):
        return (g * positive,)

    return _record("relu", out, (a,), grad_fn)


def tanh(a):
    out = np.tanh(a.data)

    def grad_fn(g):
        return (g * (1 - out * out),)

    return _record("tanh", out, (a,), grad_fn)


def sigmoid(a):
    out = special.expit(a.data)

    def grad_fn(g):
        return (g * out * (1 - out),)

    return _record("sigmoid", out, (a,), grad_fn)


def log(a):
    """Natural log, with inputs clamped below at LOG_FLOOR."""
    safe = np.maximum(a.data, a.data.dtype.type(LOG_FLOOR))
    out = np.log(safe)

    def grad_fn(g):
        return (g / safe,)

    return _record("log", out, (a,), grad_fn)


_UNARY = {"relu": relu, "tanh": tanh, "sigmoid": sigmoid, "log": log}
_BINARY = {"add": add, "mul": mul, "sub": sub}


def elementwise(kind, *operands):
    """Dispatch by name: relu, tanh, sigmoid, log, add, sub, mul, scale."""
    if kind in _UNARY:
        (x,) = operands
        return _UNARY[kind](x)
    if kind in _BINARY:
        x, y = operands
        return _BINARY[kind](x, y)
    if kind == "scale":
        x, factor = operands
        return scale(x, factor)
    raise ValueError(f"unknown elementwise kind {kind!r}")


def dropout(a, rate, rng):
    """Inverted dropout; identity when rate is 0 or no generator is given."""
    if rng is None or rate <= 0.0:
        return a
    keep = (rng.random(a.shape) >= rate).astype(a.data.dtype) / a.data.dtype.type(1.0 - rate)

    def grad_fn(g):
        return (g * keep,)

    return _record("dropout", a.data * keep, (a,), grad_fn)


# --- normalizations -----------------------------------------------------------

def masked_softmax_rows(x, mask=None):
    """Softmax over the last axis. mask is boolean, True where a position may be attended.

    A mask of shape x.shape[-2:] is shared by every leading batch slice.
    """
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape and mask.shape != x.shape[-2:]:
            raise DimensionError(f"masked_softmax_rows: mask {mask.shape} does not fit {x.shape}")
        if not mask.any(axis=-1).all():
            raise NumericsError("masked_softmax_rows: a row is fully masked")
        logits = np.where(mask, x.data, -np.inf)
    else:
        logits = x.data
    out = special.softmax(logits, axis=-1).astype(x.data.dtype, copy=False)
    if mask is not None:
        out = np.where(mask, out, x.data.dtype.type(0))

    def grad_fn(g):
        return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return _record("masked_softmax_rows", out, (x,), grad_fn)


def normalize_rows(x):
    """Divide every row by its sum (rows must have positive mass)."""
    total = np.sum(x.data, axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise NumericsError("normalize_rows: a row has no positive mass")
    out = x.data / total

    def grad_fn(g):
        return ((g - np.sum(g * out, axis=-1, keepdims=True)) / total,)

    return _record("normalize_rows", out, (x,), grad_fn)


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalize every position over its d features (axis 0 of a d or d x L tensor).

    Constant positions normalize to zero before gain and bias apply.
    """
    d = x.shape[0]
    if gain.shape != (d,) or bias.shape != (d,) or x.rank > 2:
        raise DimensionError(f"layer_norm: input {x.shape} with gain {gain.shape} and bias {bias.shape}")
    expand = (slice(None),) + (None,) * (x.rank - 1)
    mean = x.data.mean(axis=0, keepdims=True)
    centered = x.data - mean
    var = (centered * centered).mean(axis=0, keepdims=True)
    rstd = 1.0 / np.sqrt(var + x.data.dtype.type(eps))
    xhat = centered * rstd
    out = xhat * gain.data[expand] + bias.data[expand]

    def grad_fn(g):
        dxhat = g * gain.data[expand]
        dx = rstd * (dxhat - dxhat.mean(axis=0, keepdims=True)
                     - xhat * (dxhat * xhat).mean(axis=0, keepdims=True))
        reduce_axes = tuple(range(1, x.rank))
        return dx, (g * xhat).sum(axis=reduce_axes), g.sum(axis=reduce_axes)

    return _record("layer_norm", out, (x, gain, bias), grad_fn)


def l2_normalize_columns(x):
    """Scale every column to unit length; zero columns stay zero."""
    if x.rank != 2:
        raise DimensionError(f"l2_normalize_columns needs a matrix, got {x.shape}")
    norms = np.sqrt(np.sum(x.data * x.data, axis=0, keepdims=True))
    nonzero = norms > 0
    safe = np.where(nonzero, norms, 1)
    out = np.where(nonzero, x.data / safe, x.data.dtype.type(0))

    def grad_fn(g):
        proj = np.sum(g * out, axis=0, keepdims=True)
        return (np.where(nonzero, (g - out * proj) / safe, 0).astype(x.data.dtype, copy=False),)

    return _record("l2_normalize_columns", out, (x,), grad_fn)


# --- indexing, concatenation, reductions ----------------------------------------

def embedding_lookup(table, ids):
    """Column k of the result is row ids[k] of the |V| x d table."""
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    vocab = table.shape[0]
    bad = ids[(ids < 0) | (ids >= vocab)]
    if bad.size:
        raise VocabularyError(f"token id {int(bad[0])} outside vocabulary of size {vocab}")
    out = np.ascontiguousarray(table.data[ids].T)

    def grad_fn(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g.T)
        return (full,)

    return _record("embedding_lookup", out, (table,), grad_fn)


def add_bias(x, bias):
    """Add a length-d bias to every column of a d x L matrix."""
    if x.rank != 2 or bias.shape != (x.shape[0],):
        raise DimensionError(f"add_bias: bias {bias.shape} does not fit {x.shape}")

    def grad_fn(g):
        return g, g.sum(axis=1)

    return _record("add_bias", x.data + bias.data[:, None], (x, bias), grad_fn)


def concat_columns(parts, rows=None):
    """Concatenate d x L_i matrices left to right. An empty list needs `rows` and yields d x 0."""
    parts = list(parts)
    if not parts:
        if rows is None:
            raise DimensionError("concat_columns of an empty list needs the row count")
        return constant(np.zeros((rows, 0)))
    d = parts[0].shape[0]
    for part in parts:
        if part.rank != 2 or part.shape[0] != d or (rows is not None and part.shape[0] != rows):
            raise DimensionError(f"concat_columns: part {part.shape} does not have {rows or d} rows")
    out = np.concatenate([p.data for p in parts], axis=1)
    bounds = np.cumsum([p.shape[1] for p in parts])[:-1]

    def grad_fn(g):
        return tuple(np.split(g, bounds, axis=1))

    return _record("concat_columns", out, tuple(parts), grad_fn)


def gather_entries(x, rows, cols):
    """Pick x[rows[k], cols[k]] for every k into a vector."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if x.rank != 2 or rows.shape != cols.shape:
        raise DimensionError(f"gather_entries: {rows.shape} rows and {cols.shape} cols on {x.shape}")
    out = x.data[rows, cols]

    def grad_fn(g):
        full = np.zeros_like(x.data)
        np.add.at(full, (rows, cols), g)
        return (full,)

    return _record("gather_entries", out, (x,), grad_fn)


def mean_last_axis(x):
    width = x.shape[-1]

    def grad_fn(g):
        return (np.repeat(g[..., None] / width, width, axis=-1),)

    return _record("mean_last_axis", x.data.mean(axis=-1), (x,), grad_fn)


def sum_all(x):
    """Sum of every element as a one-element tensor."""

    def grad_fn(g):
        return (np.full_like(x.data, g.reshape(-1)[0]),)

    return _record("sum_all", np.asarray(x.data.sum(), dtype=x.data.dtype).reshape(1), (x,), grad_fn)


# --- gradients ------------------------------------------------------------------

def backward(tape, loss, params: Optional[Mapping[str, Tensor]] = None):
    """Gradients of a scalar loss for every trainable tensor.

    With `params` the result has one entry per mapping key (zeros for
    parameters the loss never touched); otherwise one entry per named
    trainable tensor reached by the tape.
    """
    if loss.data.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not tape.produced(loss):
        raise NumericsError("loss was not produced while this tape was active")
    grads = {id(loss): np.ones_like(loss.data)}
    leaves = {}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        for tensor, local in zip(node.inputs, node.grad_fn(g)):
            if local is None or not tensor.requires_grad:
                continue
            if tensor.trainable:
                leaves[id(tensor)] = tensor
            key = id(tensor)
            grads[key] = grads[key] + local if key in grads else local
    if params is not None:
        return {name: grads.get(id(t), np.zeros_like(t.data)) for name, t in params.items()}
    return {t.name: grads[id(t)] for t in leaves.values()}


def zero_width(rows):
    return concat_columns([], rows=rows)

