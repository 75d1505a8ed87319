"""
Vector form of a constraint set: per-pair embedded phrases and the
constraint keys / values fed to every attention layer.
"""
from __future__ import annotations

from dataclasses import dataclass

from constraints.constraint_set import ConstraintSet
from model.attention import multi_head_attention, positional_encoding, projection_weights
from numerics import tensor as T


@dataclass
class ConstraintKV:
    keys: T.Tensor  # d x |s|
    values: T.Tensor  # d x |s|
    boundaries: tuple  # (start, stop) column range per pair

    @property
    def width(self):
        return self.keys.shape[1]

    def block(self, n):
        start, stop = self.boundaries[n]
        return self.keys.data[:, start:stop], self.values.data[:, start:stop]


def embed_phrase(token_ids, embeddings, rng=None, dropout=0.0):
    """Word embedding plus positional embedding, positions counted from 0 within the phrase."""
    words = T.embedding_lookup(embeddings, token_ids)
    d, length = words.shape
    return T.dropout(T.add(words, T.constant(positional_encoding(length, d))), dropout, rng)


def vectorize_constraints(cset: ConstraintSet, embeddings, rng=None, dropout=0.0):
    """List of (S, T) matrices, d x |s_n| and d x |t_n|, one entry per pair."""
    return [(embed_phrase(pair.source_tokens, embeddings, rng, dropout),
             embed_phrase(pair.target_tokens, embeddings, rng, dropout))
            for pair in cset.pairs]


def build_constraint_kv(cset: ConstraintSet, params, rng=None, record=None):
    """K_c is the source phrases as vectors; V_c attends from every source phrase to its own target phrase.

    The shared aligner runs once per pair; blocks are concatenated in pair order.
    """
    config = params.config
    aligner = projection_weights(params, "cons.align")
    keys, values, boundaries = [], [], []
    start = 0
    for s_vec, t_vec in vectorize_constraints(cset, params["embed"], rng, config.dropout):
        keys.append(s_vec)
        values.append(multi_head_attention(s_vec, t_vec, t_vec, aligner, config.heads, record=record))
        boundaries.append((start, start + s_vec.shape[1]))
        start += s_vec.shape[1]
    return ConstraintKV(T.concat_columns(keys, rows=config.d), T.concat_columns(values, rows=config.d),
                        tuple(boundaries))


def empty_kv(d):
    zero = T.zero_width(d)
    return ConstraintKV(zero, zero, ())
