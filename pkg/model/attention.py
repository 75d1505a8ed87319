"""
Multi-head scaled dot-product attention in column layout.

Queries are d x Lq, keys and values d x Lk. Heads are formed by viewing the
projected d x L matrices as H x (d/H) x L and running batched products.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from errors import DimensionError
from numerics import tensor as T


def causal_mask(length):
    """Position t may attend to positions 0..t."""
    return np.tril(np.ones((length, length), dtype=bool))


def multi_head_attention(q, k, v, weights, heads, mask=None, record: Optional[list] = None):
    """attn(Q, K, V) with projections weights = (Wq, Wk, Wv, Wo), all d x d.

    mask is boolean Lq x Lk (True where attendable). When `record` is a list,
    the H x Lq x Lk weight map is appended to it.
    """
    wq, wk, wv, wo = weights
    d, lq = q.shape
    lk = k.shape[1]
    if k.shape != v.shape or k.shape[0] != d:
        raise DimensionError(f"attention: keys {k.shape} and values {v.shape} do not fit queries {q.shape}")
    if mask is not None and np.shape(mask) != (lq, lk):
        raise DimensionError(f"attention: mask {np.shape(mask)} is not {lq}x{lk}")
    head = d // heads

    qh = T.reshape(T.matmul(wq, q), (heads, head, lq))
    kh = T.reshape(T.matmul(wk, k), (heads, head, lk))
    vh = T.reshape(T.matmul(wv, v), (heads, head, lk))

    scores = T.scale(T.matmul(T.transpose(qh), kh), 1.0 / np.sqrt(head))  # H x Lq x Lk
    attn = T.masked_softmax_rows(scores, mask)
    if record is not None:
        record.append(attn.data)
    context = T.matmul(vh, T.transpose(attn))  # H x dh x Lq
    return T.matmul(wo, T.reshape(context, (d, lq)))


def projection_weights(params, prefix):
    return tuple(params[f"{prefix}.{part}"] for part in ("q", "k", "v", "o"))


def positional_encoding(length, d):
    """Sinusoidal table, d x length, column k encodes position k."""
    positions = np.arange(length)[None, :]
    rates = np.power(10000.0, -(np.arange(d) // 2 * 2) / d)[:, None]
    angles = positions * rates
    return np.where(np.arange(d)[:, None] % 2 == 0, np.sin(angles), np.cos(angles))
