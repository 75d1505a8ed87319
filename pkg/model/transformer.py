"""
Constraint-aware Transformer encoder-decoder.

Layers are pre-norm. In every encoder self-attention and decoder
cross-attention layer the constraint keys/values, re-projected by that
layer's own adapters, are placed in front of the ordinary keys/values. The
output layer mixes the softmax over the vocabulary with a plug-in
distribution that favours constraint target tokens, weighted by a learned
per-token gate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from constraints.constraint_set import ConstraintSet
from constraints.vectorize import ConstraintKV, build_constraint_kv
from datapipe.vocab import BOS_ID, EOS_ID, UNK_ID
from errors import DimensionError
from model.attention import causal_mask, multi_head_attention, positional_encoding, projection_weights
from model.config import ModelConfig
from model.params import ModelParams
from numerics import tensor as T

logger = logging.getLogger(__name__)


@dataclass
class ForwardTrace:
    encoder_states: list = field(default_factory=list)  # H_enc after embedding and after every layer
    decoder_states: list = field(default_factory=list)
    attention: dict = field(default_factory=dict)  # layer name -> list of H x Lq x Lk maps
    outputs: Optional[np.ndarray] = None  # d x |y| decoder outputs, one h_t per column

    def recorder(self, name):
        return self.attention.setdefault(name, [])


@dataclass
class DecodeContext:
    """Per-sentence state reused across search steps."""
    source_ids: tuple
    constraints: ConstraintSet
    encoded: T.Tensor
    kv: Optional[ConstraintKV]


def _recorder(trace, name):
    return trace.recorder(name) if trace is not None else None


class ConstrainedTransformer:
    bos_id = BOS_ID
    eos_id = EOS_ID
    unk_id = UNK_ID

    def __init__(self, params: ModelParams, word_internal_ids=()):
        self.params = params
        self.word_internal_ids = frozenset(word_internal_ids)  # subword ids that do not end a word

    @property
    def config(self) -> ModelConfig:
        return self.params.config

    @property
    def vocab_size(self):
        return self.config.vocab_size

    # --- building blocks ------------------------------------------------------

    def embed(self, ids, rng=None):
        """Word embedding plus sinusoidal position, d x len(ids)."""
        if len(ids) > self.config.max_len:
            raise DimensionError(f"sequence of length {len(ids)} exceeds max_len {self.config.max_len}")
        words = T.embedding_lookup(self.params["embed"], ids)
        positions = T.constant(positional_encoding(len(ids), self.config.d))
        return T.dropout(T.add(words, positions), self.config.dropout, rng)

    def _norm(self, x, prefix):
        return T.layer_norm(x, self.params[f"{prefix}.gain"], self.params[f"{prefix}.bias"], self.config.layer_norm_eps)

    def _ffn(self, x, prefix):
        p = self.params
        hidden = T.relu(T.add_bias(T.matmul(p[f"{prefix}.w1"], x), p[f"{prefix}.b1"]))
        return T.add_bias(T.matmul(p[f"{prefix}.w2"], hidden), p[f"{prefix}.b2"])

    def adapt(self, x, prefix):
        """Two linear maps with a ReLU in between; every layer and role owns its own weights."""
        return self._ffn(x, prefix)

    def _memory(self, kv, side, layer, base):
        """Keys and values for one attention layer: adapted constraint columns first, then `base`."""
        if kv is None:
            return base, base
        keys = T.concat_columns([self.adapt(kv.keys, f"cons.{side}.{layer}.key"), base])
        values = T.concat_columns([self.adapt(kv.values, f"cons.{side}.{layer}.value"), base])
        return keys, values

    def _residual(self, h, sublayer_out, rng):
        return T.add(h, T.dropout(sublayer_out, self.config.dropout, rng))

    # --- encoder / decoder ----------------------------------------------------

    def constraint_kv(self, cset: ConstraintSet, rng=None, trace=None):
        if not self.config.integrate_attention:
            return None
        return build_constraint_kv(cset, self.params, rng, _recorder(trace, "cons.align"))

    def encode(self, x_ids, kv: Optional[ConstraintKV] = None, rng=None, trace: Optional[ForwardTrace] = None):
        if len(x_ids) == 0:
            raise DimensionError("cannot encode an empty source sentence")
        cfg = self.config
        h = self.embed(x_ids, rng)
        if trace is not None:
            trace.encoder_states.append(h.data)
        for i in range(cfg.enc_layers):
            a = self._norm(h, f"enc.{i}.ln1")
            keys, values = self._memory(kv, "enc", i, a)
            attended = multi_head_attention(a, keys, values, projection_weights(self.params, f"enc.{i}.attn"),
                                            cfg.heads, record=_recorder(trace, f"enc.{i}"))
            h = self._residual(h, attended, rng)
            h = self._residual(h, self._ffn(self._norm(h, f"enc.{i}.ln2"), f"enc.{i}.ffn"), rng)
            if trace is not None:
                trace.encoder_states.append(h.data)
        return self._norm(h, "enc.ln")

    def decode(self, y_ids, encoded, kv: Optional[ConstraintKV] = None, rng=None,
               trace: Optional[ForwardTrace] = None):
        """Decoder states d x |y| for a prefix that starts with BOS; column t only sees y[0..t]."""
        if len(y_ids) == 0:
            raise DimensionError("decoder input needs at least the BOS token")
        cfg = self.config
        h = self.embed(y_ids, rng)
        mask = causal_mask(len(y_ids))
        for j in range(cfg.dec_layers):
            a = self._norm(h, f"dec.{j}.ln1")
            attended = multi_head_attention(a, a, a, projection_weights(self.params, f"dec.{j}.self"), cfg.heads,
                                            mask, record=_recorder(trace, f"dec.{j}.self"))
            h = self._residual(h, attended, rng)
            a = self._norm(h, f"dec.{j}.ln2")
            keys, values = self._memory(kv, "dec", j, encoded)
            attended = multi_head_attention(a, keys, values, projection_weights(self.params, f"dec.{j}.cross"),
                                            cfg.heads, record=_recorder(trace, f"dec.{j}.cross"))
            h = self._residual(h, attended, rng)
            h = self._residual(h, self._ffn(self._norm(h, f"dec.{j}.ln3"), f"dec.{j}.ffn"), rng)
            if trace is not None:
                trace.decoder_states.append(h.data)
        out = self._norm(h, "dec.ln")
        if trace is not None:
            trace.outputs = out.data
        return out

    # --- output layer -----------------------------------------------------------

    def gate_logits(self, h):
        """Gate pre-activations for every (position, vocabulary entry), |y| x V."""
        p, d = self.params, self.config.d
        steps, vocab = h.shape[1], self.vocab_size
        w3 = p["cons.gate.w3"]
        word_part = T.matmul(T.tanh(T.matmul(p["embed"], p["cons.gate.w1"])), T.slice_rows(w3, 0, d))  # V x 1
        state_part = T.matmul(T.tanh(T.matmul(T.transpose(h), p["cons.gate.w2"])), T.slice_rows(w3, d, 2 * d))
        ones_col = T.constant(np.ones((steps, 1)))
        ones_row = T.constant(np.ones((1, vocab)))
        return T.add(T.matmul(ones_col, T.transpose(word_part)), T.matmul(state_part, ones_row))

    def plug_in(self, h, cset: ConstraintSet):
        """Clamped cosine between h_t and the embedding of each constraint target token, zero elsewhere."""
        steps, vocab = h.shape[1], self.vocab_size
        ids = sorted(cset.target_token_ids)
        if not ids:
            return T.constant(np.zeros((steps, vocab)))
        targets = T.embedding_lookup(self.params["embed"], ids)  # d x C
        cosine = T.matmul(T.transpose(T.l2_normalize_columns(h)), T.l2_normalize_columns(targets))
        scatter = np.zeros((len(ids), vocab))
        scatter[np.arange(len(ids)), ids] = 1.0
        return T.matmul(T.relu(cosine), T.constant(scatter))

    def output_distribution(self, h, cset: ConstraintSet):
        """Rows of the result are distributions over the target vocabulary, one per column of h."""
        if h.rank == 1:
            h = T.reshape(h, (h.shape[0], 1))
        model_probs = T.masked_softmax_rows(T.matmul(T.transpose(h), self.params["out.W"]))
        if not self.config.integrate_output:
            return model_probs
        gate = T.sigmoid(self.gate_logits(h))
        keep = T.sub(T.constant(np.ones(gate.shape)), gate)
        mixture = T.mul(keep, model_probs)
        if len(cset):
            mixture = T.add(mixture, T.mul(gate, self.plug_in(h, cset)))
        if logger.isEnabledFor(logging.DEBUG):
            mass = mixture.data.sum(axis=-1)
            logger.debug("output mixture mass before renormalization: min %.4f max %.4f", mass.min(), mass.max())
        return T.normalize_rows(mixture)

    def forward(self, x_ids, y_in, cset: ConstraintSet, rng=None, trace: Optional[ForwardTrace] = None):
        """Teacher-forced probabilities |y_in| x V."""
        kv = self.constraint_kv(cset, rng, trace)
        encoded = self.encode(x_ids, kv, rng, trace)
        return self.output_distribution(self.decode(y_in, encoded, kv, rng, trace), cset)

    # --- search protocol --------------------------------------------------------

    def start(self, x_ids, cset: ConstraintSet) -> DecodeContext:
        kv = self.constraint_kv(cset)
        return DecodeContext(tuple(x_ids), cset, self.encode(x_ids, kv), kv)

    def next_log_probs(self, context: DecodeContext, prefix):
        """Log-probabilities of the token following `prefix` (which starts with BOS)."""
        h = self.decode(list(prefix), context.encoded, context.kv)
        last = T.transpose(T.slice_rows(T.transpose(h), h.shape[1] - 1, h.shape[1]))
        probs = self.output_distribution(last, context.constraints).data[0]
        return np.log(np.maximum(probs.astype(np.float64), T.LOG_FLOOR))


def gate_value(w_y, h_t, params: ModelParams):
    """sigmoid(tanh([w_y^T W1 ; h_t^T W2]) W3) for one word vector and one decoder state."""
    d = params.config.d
    w3 = params["cons.gate.w3"]
    word = T.tanh(T.matmul(T.reshape(w_y, (1, d)), params["cons.gate.w1"]))
    state = T.tanh(T.matmul(T.reshape(h_t, (1, d)), params["cons.gate.w2"]))
    logit = T.add(T.matmul(word, T.slice_rows(w3, 0, d)), T.matmul(state, T.slice_rows(w3, d, 2 * d)))
    return T.reshape(T.sigmoid(logit), (1,))
