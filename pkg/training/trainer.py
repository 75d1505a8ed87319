"""
Two-stage training.

Stage 1 updates only the vanilla Transformer tensors with the plain
objective and no constraints. Stage 2 updates every tensor with the
weighted objective on examples that carry their sampled constraints. The
learning-rate schedule runs over the global step count of both stages.
"""
from __future__ import annotations

import logging
import queue
import threading
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from constraints.constraint_set import ConstraintSet
from errors import ConfigError, DataError
from numerics.tensor import Tape, backward
from training.loss import Example, constrained_loss
from training.metrics_log import MetricsLog
from training.optimizer import BETA1, BETA2, EPSILON, OptimizerState, adam_update, clip_by_global_norm, lr_at_step

logger = logging.getLogger(__name__)

VDBA_WEIGHTS = (0.5, 0.5)
BEAM_WEIGHTS = (0.8, 0.2)


@dataclass(frozen=True)
class TrainConfig:
    seed: int
    alpha: Optional[float] = None  # None: chosen from `decoder`
    beta: Optional[float] = None
    decoder: str = "vdba"
    label_smoothing: float = 0.1
    adam_beta1: float = BETA1
    adam_beta2: float = BETA2
    adam_eps: float = EPSILON
    warmup_steps: int = 400
    stage1_steps: int = 2000
    stage2_steps: int = 500
    batch_tokens: int = 1000
    log_interval: int = 50
    lr_scale: float = 1.0
    clip_norm: Optional[float] = None
    deterministic: bool = False

    def __post_init__(self):
        alpha, beta = self.loss_weights
        if alpha < 0 or beta < 0 or alpha + beta <= 0:
            raise ConfigError(f"loss weights must be non-negative and not both zero (alpha={alpha}, beta={beta})")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ConfigError(f"label_smoothing must lie in [0, 1), got {self.label_smoothing}")
        if self.stage1_steps < 0 or self.stage2_steps < 0 or self.warmup_steps < 1:
            raise ConfigError("step counts must be non-negative and warmup_steps positive")
        if self.batch_tokens < 1 or self.log_interval < 1:
            raise ConfigError("batch_tokens and log_interval must be positive")

    @property
    def loss_weights(self):
        default = VDBA_WEIGHTS if self.decoder == "vdba" else BEAM_WEIGHTS
        return (default[0] if self.alpha is None else self.alpha,
                default[1] if self.beta is None else self.beta)


@dataclass
class StepRecord:
    step: int
    stage: int
    loss: float
    lr: float


def build_examples(source_ids: Sequence[Sequence[int]], target_ids: Sequence[Sequence[int]],
                   constraint_sets: Optional[Sequence[ConstraintSet]] = None) -> List[Example]:
    if len(source_ids) != len(target_ids):
        raise DataError(f"{len(source_ids)} source sentences but {len(target_ids)} targets")
    if constraint_sets is None:
        constraint_sets = [ConstraintSet()] * len(source_ids)
    if len(constraint_sets) != len(source_ids):
        raise DataError(f"{len(constraint_sets)} constraint records for {len(source_ids)} sentence pairs")
    return [Example.from_ids(s, t, c) for s, t, c in zip(source_ids, target_ids, constraint_sets)]


def step_rngs(seed, step):
    """(batch generator, dropout generator) for one global step."""
    return np.random.default_rng([seed, step, 0]), np.random.default_rng([seed, step, 1])


def assemble_batch(examples: Sequence[Example], batch_tokens, rng):
    """Random examples until the target-token budget is reached (at least one example)."""
    batch = []
    tokens = 0
    for index in rng.permutation(len(examples)):
        batch.append(examples[index])
        tokens += examples[index].tokens
        if tokens >= batch_tokens:
            break
    return batch


@dataclass(frozen=True)
class _ProducerFailure:
    error: Exception


class BatchPrefetcher:
    """Assembles the batch of the next step on a background thread, one batch ahead."""

    def __init__(self, examples, steps, batch_tokens, seed):
        self._queue = queue.Queue(maxsize=1)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._produce, args=(examples, list(steps), batch_tokens, seed),
                                        name="BatchPrefetcher", daemon=True)
        self._thread.start()

    def _put(self, item):
        while not self._stop.is_set():
            try:
                self._queue.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def _produce(self, examples, steps, batch_tokens, seed):
        for step in steps:
            try:
                batch = assemble_batch(examples, batch_tokens, step_rngs(seed, step)[0])
            except Exception as e:  # handed to the consumer
                self._put(_ProducerFailure(e))
                return
            if not self._put((step, batch)):
                return

    def get(self):
        item = self._queue.get()
        if isinstance(item, _ProducerFailure):
            raise item.error
        return item

    def close(self):
        self._stop.set()
        self._thread.join(timeout=1.0)


class Trainer:
    def __init__(self, config: TrainConfig, model, examples: Sequence[Example], metrics: Optional[MetricsLog] = None,
                 state: Optional[OptimizerState] = None):
        if not examples:
            raise DataError("cannot train on an empty corpus")
        self.config = config
        self.model = model
        self.examples = list(examples)
        self.pool = self.examples
        self.metrics = metrics
        self.state = state or OptimizerState.for_params(model.params.tensors)
        self.history: List[StepRecord] = []

    def _batches(self, steps):
        if self.config.deterministic:
            for step in steps:
                yield step, assemble_batch(self.pool, self.config.batch_tokens, step_rngs(self.config.seed, step)[0])
            return
        prefetcher = BatchPrefetcher(self.pool, steps, self.config.batch_tokens, self.config.seed)
        try:
            for _ in steps:
                yield prefetcher.get()
        finally:
            prefetcher.close()

    def train_step(self, step, stage, batch):
        cfg = self.config
        alpha, beta = (1.0, 1.0) if stage == 1 else cfg.loss_weights
        names = self.model.params.theta_v if stage == 1 else self.model.params.tensors
        dropout_rng = step_rngs(cfg.seed, step)[1]
        with Tape() as tape:
            loss = constrained_loss(self.model, batch, alpha, beta, cfg.label_smoothing, dropout_rng)
        grads = backward(tape, loss, names)
        if cfg.clip_norm is not None:
            clip_by_global_norm(grads, cfg.clip_norm)
        lr = cfg.lr_scale * lr_at_step(step, self.model.config.d, cfg.warmup_steps)
        adam_update(self.model.params.tensors, grads, self.state, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        record = StepRecord(step, stage, loss.item(), lr)
        self.history.append(record)
        return record

    def run_stage(self, stage, first_step, count):
        cfg = self.config
        if stage == 1:
            self.pool = [replace(e, constraints=ConstraintSet()) for e in self.examples]
        else:
            self.pool = self.examples
        steps = range(first_step, first_step + count)
        window = []
        for step, batch in self._batches(steps):
            record = self.train_step(step, stage, batch)
            window.append(record.loss)
            if len(window) == cfg.log_interval or step == steps[-1]:
                mean = float(np.mean(window))
                logger.info("stage %d step %d loss %.4f lr %.3e", stage, step, mean, record.lr)
                if self.metrics is not None:
                    self.metrics.write(step, stage, mean, record.lr)
                window = []

    def run(self):
        cfg = self.config
        logger.info("training: %d stage-1 steps, %d stage-2 steps over %d examples",
                    cfg.stage1_steps, cfg.stage2_steps, len(self.examples))
        if cfg.stage1_steps:
            frozen = self.model.params.checksum("constraint")
            self.run_stage(1, 1, cfg.stage1_steps)
            if self.model.params.checksum("constraint") != frozen:
                raise RuntimeError("stage 1 modified constraint-path parameters")
        if cfg.stage2_steps:
            self.run_stage(2, cfg.stage1_steps + 1, cfg.stage2_steps)
        return self.model.params, self.state, self.history


def train(config: TrainConfig, model, examples: Sequence[Example], metrics: Optional[MetricsLog] = None,
          state: Optional[OptimizerState] = None):
    return Trainer(config, model, examples, metrics, state).run()
