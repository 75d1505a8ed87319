import os

import pytest

from constraints.constraint_set import ConstraintPair, ConstraintSet
from model.config import ModelConfig
from model.params import ModelParams
from model.transformer import ConstrainedTransformer

os.environ.setdefault("QT_QPA_PLATFORM", "offscreen")


def tiny_config(**kwargs):
    settings = dict(vocab_size=12, d=8, heads=2, enc_layers=1, dec_layers=1, ffn_size=16, dropout=0.0, max_len=32)
    settings.update(kwargs)
    return ModelConfig(**settings)


def tiny_model(seed=0, **kwargs):
    return ConstrainedTransformer(ModelParams.initialize(tiny_config(**kwargs), seed))


@pytest.fixture
def model():
    return tiny_model()


@pytest.fixture
def cset():
    return ConstraintSet((ConstraintPair((4, 5), (9, 10)), ConstraintPair((6,), (11,))))
