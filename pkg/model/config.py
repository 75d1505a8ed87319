from __future__ import annotations

from dataclasses import dataclass, fields, replace

from errors import ConfigError


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d: int = 64
    heads: int = 2
    enc_layers: int = 2
    dec_layers: int = 2
    ffn_size: int = 128
    dropout: float = 0.1
    max_len: int = 256
    integrate_attention: bool = True  # constraint keys/values in attention
    integrate_output: bool = True  # gated plug-in distribution
    layer_norm_eps: float = 1e-5

    def __post_init__(self):
        if self.vocab_size < 5:
            raise ConfigError(f"vocab_size must leave room for the special tokens, got {self.vocab_size}")
        if self.d < 1 or self.heads < 1 or self.d % self.heads:
            raise ConfigError(f"hidden size {self.d} is not divisible by {self.heads} heads")
        if self.enc_layers < 1 or self.dec_layers < 1:
            raise ConfigError("encoder and decoder need at least one layer each")
        if self.ffn_size < 1 or self.max_len < 1:
            raise ConfigError("ffn_size and max_len must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")

    @property
    def head_size(self):
        return self.d // self.heads

    @classmethod
    def base(cls, vocab_size):
        """The full-size setting: d=512, 8 heads, 6+6 layers."""
        return cls(vocab_size=vocab_size, d=512, heads=8, enc_layers=6, dec_layers=6, ffn_size=2048)

    def vanilla(self):
        return replace(self, integrate_attention=False, integrate_output=False)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}
