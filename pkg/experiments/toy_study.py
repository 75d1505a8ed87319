"""
Toy-task study.

Trains the vanilla system (stage 2 skipped), the attention-only,
output-only and fully integrated systems from one shared stage-1 model,
plus a fully integrated system on the code-switched corpus. Every system is
decoded on the held-out toy set and scored into one results table, and the
expected trends are checked against that table.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List

import pandas as pd

from cli.run_config import RunConfig
from constraints.constraint_set import ConstraintSet
from datapipe.bpe import BpeModel, debpe, encode_sentences, learn_bpe
from datapipe.code_switch import code_switch_corpus
from datapipe.corpus_io import ParallelCorpus
from datapipe.sampling import sample_corpus_constraints
from datapipe.toy_corpus import ToyCorpusConfig, gen_toy_corpus
from datapipe.vocab import EOS_ID
from decoding.translate import translate_corpus
from evaluation.prob_stats import prob_stats
from evaluation.report import evaluate_hypotheses
from model.params import ModelParams
from model.transformer import ConstrainedTransformer
from training.trainer import Trainer, build_examples, train

logger = logging.getLogger(__name__)

# system -> (integrate_attention, integrate_output)
INTEGRATED_SYSTEMS = {"attention": (True, False), "output": (False, True), "both": (True, True)}
DECODERS = ("beam", "vdba")
RESULT_COLUMNS = ["task", "system", "decoder", "bleu", "csr", "avg_prob_all", "avg_prob_constrained"]
CSR_TOLERANCE = 1.0


@dataclass
class ToySplit:
    corpus: ParallelCorpus
    records: list  # sampled PhraseConstraint lists, one per sentence


@dataclass
class StudyData:
    bpe: BpeModel
    train: ToySplit
    test: ToySplit


def prepare_data(cfg: RunConfig) -> StudyData:
    toy = ToyCorpusConfig(vocab_size=cfg.toy_vocab_size, sentences=cfg.toy_sentences + cfg.test_sentences,
                          min_len=cfg.toy_min_len, max_len=cfg.toy_max_len, swap_rate=cfg.toy_swap_rate, seed=cfg.seed)
    corpus, _ = gen_toy_corpus(toy)
    split = cfg.toy_sentences
    splits = []
    for part in (slice(0, split), slice(split, None)):
        subset = ParallelCorpus(corpus.sources[part], corpus.targets[part], corpus.alignments[part])
        records = sample_corpus_constraints(subset, cfg.seed, cfg.max_constraints, cfg.max_phrase_len,
                                            cfg.min_constraints)
        splits.append(ToySplit(subset, records))
    train_split, test_split = splits
    bpe = learn_bpe(train_split.corpus.sources + train_split.corpus.targets, cfg.bpe_merges)
    return StudyData(bpe, train_split, test_split)


def _csets(bpe, records):
    return [ConstraintSet.from_phrases(record, bpe, on_unknown="unk") for record in records]


def _examples(cfg, bpe, split: ToySplit):
    examples = build_examples(encode_sentences(bpe, split.corpus.sources), encode_sentences(bpe, split.corpus.targets),
                              _csets(bpe, split.records))
    kept = [e for e in examples if max(len(e.source_ids), len(e.target_ids)) <= cfg.max_len]
    if len(kept) < len(examples):
        logger.warning("skipped %d sentence pairs longer than max_len %d", len(examples) - len(kept), cfg.max_len)
    return kept


def train_systems(cfg: RunConfig, data: StudyData) -> Dict[str, ConstrainedTransformer]:
    """Vanilla and integrated systems sharing the same stage-1 parameters."""
    bpe = data.bpe
    examples = _examples(cfg, bpe, data.train)
    model_config = cfg.model_config(len(bpe.vocab))
    train_config = cfg.train_config()
    base = ConstrainedTransformer(ModelParams.initialize(model_config, cfg.seed), bpe.word_internal_ids)
    params, state, _ = train(replace(train_config, stage2_steps=0), base, examples)
    systems = {"vanilla": ConstrainedTransformer(ModelParams(model_config.vanilla(), params.copy().tensors),
                                                 bpe.word_internal_ids)}
    for name, (attention, output) in INTEGRATED_SYSTEMS.items():
        variant = replace(model_config, integrate_attention=attention, integrate_output=output)
        model = ConstrainedTransformer(ModelParams(variant, params.copy().tensors), bpe.word_internal_ids)
        trainer = Trainer(train_config, model, examples, state=copy.deepcopy(state))
        trainer.run_stage(2, train_config.stage1_steps + 1, train_config.stage2_steps)
        logger.info("trained the %s system", name)
        systems[name] = model
    return systems


def score_system(cfg: RunConfig, model, bpe, split: ToySplit, decoder, task, system) -> dict:
    csets = _csets(bpe, split.records)
    results = translate_corpus(model, encode_sentences(bpe, split.corpus.sources), csets, decoder, cfg.beam_size,
                               cfg.decode_max_len, cfg.workers_in_use)
    hypotheses = [debpe(bpe.vocab.decode(r.hypothesis.output_tokens(EOS_ID))) for r in results]
    report = evaluate_hypotheses(hypotheses, split.corpus.targets, split.records)
    examples = _examples(cfg, bpe, split)
    avg_all, avg_constrained = prob_stats(model, examples)
    logger.info("%s / %s / %s: bleu %.2f csr %.2f", task, system, decoder, report.bleu, report.csr)
    return {"task": task, "system": system, "decoder": decoder, "bleu": report.bleu, "csr": report.csr,
            "avg_prob_all": avg_all, "avg_prob_constrained": avg_constrained}


def code_switched_row(cfg: RunConfig, data: StudyData) -> dict:
    """Fully integrated system trained and tested on code-switched data, decoded with beam search."""
    splits = []
    for split in (data.train, data.test):
        corpus, records = code_switch_corpus(split.corpus, split.records, cfg.seed, cfg.code_switch_probability)
        splits.append(ToySplit(corpus, records))
    switched_train, switched_test = splits
    bpe = data.bpe
    model = ConstrainedTransformer(ModelParams.initialize(cfg.model_config(len(bpe.vocab)), cfg.seed),
                                   bpe.word_internal_ids)
    train(cfg.train_config(), model, _examples(cfg, bpe, switched_train))
    return score_system(cfg, model, bpe, switched_test, "beam", "code-switched", "both")


def run_study(cfg: RunConfig) -> pd.DataFrame:
    data = prepare_data(cfg)
    systems = train_systems(cfg, data)
    rows: List[dict] = []
    for system, model in systems.items():
        for decoder in DECODERS:
            rows.append(score_system(cfg, model, data.bpe, data.test, decoder, "toy", system))
    rows.append(code_switched_row(cfg, data))
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def _cell(frame, column, task="toy", **match):
    rows = frame[frame["task"] == task]
    for key, value in match.items():
        rows = rows[rows[key] == value]
    return float(rows[column].iloc[0])


def trend_checks(frame: pd.DataFrame) -> pd.DataFrame:
    """Each expected trend of the study with the numbers it compares and whether it holds."""
    toy = frame[frame["task"] == "toy"]
    vdba_csr = float(toy[toy["decoder"] == "vdba"]["csr"].min())
    vanilla_beam = _cell(frame, "csr", system="vanilla", decoder="beam")
    both_beam = _cell(frame, "csr", system="both", decoder="beam")
    attention_beam = _cell(frame, "csr", system="attention", decoder="beam")
    output_beam = _cell(frame, "csr", system="output", decoder="beam")
    both_vdba_bleu = _cell(frame, "bleu", system="both", decoder="vdba")
    vanilla_beam_bleu = _cell(frame, "bleu", system="vanilla", decoder="beam")
    switched = _cell(frame, "csr", task="code-switched", system="both", decoder="beam")
    prob_all = _cell(frame, "avg_prob_all", system="both", decoder="beam")
    prob_constrained = _cell(frame, "avg_prob_constrained", system="both", decoder="beam")
    checks = [
        ("vdba csr is 100 for every system", vdba_csr, 100.0, vdba_csr == 100.0),
        ("vanilla beam csr at most 50", vanilla_beam, 50.0, vanilla_beam <= 50.0),
        ("integrated beam csr at least 85", both_beam, 85.0, both_beam >= 85.0),
        ("integrated vdba bleu at least vanilla beam bleu", both_vdba_bleu, vanilla_beam_bleu,
         both_vdba_bleu >= vanilla_beam_bleu),
        ("attention-only beam csr above output-only", attention_beam, output_beam, attention_beam > output_beam),
        ("combined beam csr not below either part", both_beam, max(attention_beam, output_beam),
         both_beam >= max(attention_beam, output_beam) - CSR_TOLERANCE),
        ("code-switched beam csr at least 80", switched, 80.0, switched >= 80.0),
        ("constrained tokens more probable than average", prob_constrained, prob_all, prob_constrained > prob_all),
    ]
    return pd.DataFrame(checks, columns=["trend", "observed", "reference", "holds"])


def write_study(frame: pd.DataFrame, checks: pd.DataFrame, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out / "results.tsv", sep="\t", index=False, float_format="%.4f")
    checks.to_csv(out / "trends.tsv", sep="\t", index=False, float_format="%.4f")
    held = int(checks["holds"].sum())
    logger.info("%d of %d trends hold; tables written to %s", held, len(checks), out)
    return out
