"""
Run configuration: a flat "key = value" file merged with command-line overrides.

Every field of RunConfig is a valid key and a valid flag (--ffn-size 128).
`seed` has no default; a run without one is rejected.
"""
from __future__ import annotations

import typing
from dataclasses import MISSING, asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from errors import ConfigError
from model.config import ModelConfig
from training.trainer import TrainConfig

TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    # toy data
    toy_vocab_size: int = 200
    toy_sentences: int = 10000
    test_sentences: int = 200
    toy_min_len: int = 4
    toy_max_len: int = 12
    toy_swap_rate: float = 0.1
    bpe_merges: int = 500
    # constraints
    max_constraints: int = 3
    max_phrase_len: int = 3
    min_constraints: int = 0
    code_switch_probability: float = 0.5
    # model
    d: int = 64
    heads: int = 2
    enc_layers: int = 2
    dec_layers: int = 2
    ffn_size: int = 128
    dropout: float = 0.1
    max_len: int = 256
    integrate_attention: bool = True
    integrate_output: bool = True
    # training
    alpha: Optional[float] = None
    beta: Optional[float] = None
    label_smoothing: float = 0.1
    warmup_steps: int = 400
    stage1_steps: int = 2000
    stage2_steps: int = 500
    batch_tokens: int = 1000
    log_interval: int = 50
    lr_scale: float = 1.0
    clip_norm: Optional[float] = None
    # decoding
    decoder: str = "vdba"
    beam_size: int = 4
    decode_max_len: Optional[int] = None
    deterministic: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.decoder not in ("beam", "vdba"):
            raise ConfigError(f"decoder must be 'beam' or 'vdba', got {self.decoder!r}")
        if self.beam_size < 1 or self.workers < 1:
            raise ConfigError("beam_size and workers must be positive")

    def model_config(self, vocab_size) -> ModelConfig:
        return ModelConfig(vocab_size=vocab_size, d=self.d, heads=self.heads, enc_layers=self.enc_layers,
                           dec_layers=self.dec_layers, ffn_size=self.ffn_size, dropout=self.dropout,
                           max_len=self.max_len, integrate_attention=self.integrate_attention,
                           integrate_output=self.integrate_output)

    def train_config(self) -> TrainConfig:
        return TrainConfig(seed=self.seed, alpha=self.alpha, beta=self.beta, decoder=self.decoder,
                           label_smoothing=self.label_smoothing, warmup_steps=self.warmup_steps,
                           stage1_steps=self.stage1_steps, stage2_steps=self.stage2_steps,
                           batch_tokens=self.batch_tokens, log_interval=self.log_interval, lr_scale=self.lr_scale,
                           clip_norm=self.clip_norm, deterministic=self.deterministic)

    @property
    def workers_in_use(self):
        return 1 if self.deterministic else self.workers

    def to_text(self):
        return "".join(f"{key} = {_format_value(value)}\n" for key, value in asdict(self).items())

    def save(self, path):
        Path(path).write_text(self.to_text(), encoding="utf-8")


def _format_value(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def field_types():
    return typing.get_type_hints(RunConfig)


def coerce(key, raw, hint):
    """Convert a text value to the annotated type of `key`."""
    text = raw.strip() if isinstance(raw, str) else raw
    if not isinstance(text, str):
        return text
    if typing.get_origin(hint) is typing.Union:
        inner = [a for a in typing.get_args(hint) if a is not type(None)][0]
        if text.lower() in ("", "none", "null"):
            return None
        return coerce(key, text, inner)
    try:
        if hint is bool:
            lowered = text.lower()
            if lowered in TRUE_WORDS:
                return True
            if lowered in FALSE_WORDS:
                return False
            raise ValueError(text)
        if hint is int:
            return int(text)
        if hint is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {hint.__name__}") from None
    return text


def parse_config_text(text, source="<config>"):
    """Key/value pairs of a config file; '#' starts a comment."""
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{number}: expected 'key = value'")
        values[key.strip()] = value.strip()
    return values


def build_run_config(file_values=None, overrides=None) -> RunConfig:
    """Merge file values and overrides (overrides win); unknown keys and a missing seed are errors."""
    hints = field_types()
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(merged) - set(hints))
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
    required = [f.name for f in fields(RunConfig) if f.default is MISSING and f.name not in merged]
    if required:
        raise ConfigError(f"missing required configuration key(s): {', '.join(required)}")
    return RunConfig(**{key: coerce(key, value, hints[key]) for key, value in merged.items()})


def load_run_config(path=None, overrides=None) -> RunConfig:
    file_values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        file_values = parse_config_text(text, str(path))
    return build_run_config(file_values, overrides)
