"""
Command-line entry point.

Subcommands: gen-toy, learn-bpe, sample-constraints, code-switch, train,
translate, evaluate, reproduce, plot-metrics, monitor. Exit status is 0 on
success, 1 on usage/configuration errors and 2 on data or format errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from cli.run_config import field_types, load_run_config, parse_config_text, build_run_config
from constraints.constraint_set import ConstraintSet
from datapipe.bpe import debpe, encode_sentences, learn_bpe, load_bpe, save_bpe
from datapipe.code_switch import code_switch_corpus
from datapipe.corpus_io import (ParallelCorpus, read_constraint_file, read_corpus, read_lines, write_constraint_file,
                                write_corpus, write_lines)
from datapipe.sampling import sample_corpus_constraints
from datapipe.toy_corpus import ToyCorpusConfig, gen_toy_corpus
from datapipe.vocab import EOS_ID
from decoding.translate import translate_corpus
from errors import ConfigError, DataError, VocabularyError
from evaluation.overlap import constraint_overlap_ratio
from evaluation.prob_stats import prob_stats
from evaluation.report import evaluate_hypotheses, write_details, write_report
from model.params import ModelParams
from model.transformer import ConstrainedTransformer
from training.checkpoint import load_checkpoint, save_checkpoint
from training.loss import Example
from training.metrics_log import MetricsLog
from training.trainer import build_examples, train

logger = logging.getLogger(__name__)

RUN_CONFIG_NAME = "run.cfg"
CHECKPOINT_NAME = "model.ckpt"
METRICS_NAME = "metrics.tsv"


class UsageErrorParser(argparse.ArgumentParser):
    """Reports usage errors as ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(f"{message}\n{self.format_usage().strip()}")


# --- helpers ----------------------------------------------------------------------

def _overrides(args):
    return {name: getattr(args, name, None) for name in field_types()}


def _config(args):
    return load_run_config(args.config, _overrides(args))


def _checkpoint_config(args, checkpoint):
    """Configuration archived next to a checkpoint, then --config, then flags."""
    archived = Path(checkpoint).parent / RUN_CONFIG_NAME
    try:
        values = parse_config_text(archived.read_text(encoding="utf-8"), str(archived))
    except OSError as e:
        raise DataError(f"cannot read {archived}: {e}") from e
    if args.config:
        values.update(parse_config_text(Path(args.config).read_text(encoding="utf-8"), args.config))
    return build_run_config(values, _overrides(args))


def _constraint_sets(path, bpe, count):
    if path is None:
        return [ConstraintSet()] * count, [[] for _ in range(count)]
    records = read_constraint_file(path)
    if len(records) != count:
        raise DataError(f"{path}: {len(records)} constraint records for {count} sentences")
    return [ConstraintSet.from_phrases(r, bpe, on_unknown="unk") for r in records], records


def _load_model(args, checkpoint, bpe):
    cfg = _checkpoint_config(args, checkpoint)
    params, _ = load_checkpoint(checkpoint, cfg.model_config(len(bpe.vocab)))
    return cfg, ConstrainedTransformer(params, bpe.word_internal_ids)


# --- subcommands --------------------------------------------------------------------

def cmd_gen_toy(args):
    cfg = _config(args)
    toy = ToyCorpusConfig(vocab_size=cfg.toy_vocab_size, sentences=cfg.toy_sentences + cfg.test_sentences,
                          min_len=cfg.toy_min_len, max_len=cfg.toy_max_len, swap_rate=cfg.toy_swap_rate, seed=cfg.seed)
    corpus, lexicon = gen_toy_corpus(toy)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    split = cfg.toy_sentences
    for name, part in (("train", slice(0, split)), ("test", slice(split, None))):
        subset = ParallelCorpus(corpus.sources[part], corpus.targets[part], corpus.alignments[part])
        write_corpus(subset, out / f"{name}.src", out / f"{name}.tgt", out / f"{name}.align")
    pd.DataFrame(sorted(lexicon.items()), columns=["source", "target"]).to_csv(out / "lexicon.tsv", sep="\t",
                                                                               index=False)
    logger.info("wrote %d training and %d test pairs to %s", split, len(corpus) - split, out)


def cmd_learn_bpe(args):
    cfg = _config(args)
    sentences = []
    for path in args.inputs:
        sentences.extend(read_lines(path))
    save_bpe(learn_bpe(sentences, cfg.bpe_merges), args.out)


def cmd_sample_constraints(args):
    cfg = _config(args)
    corpus = read_corpus(args.src, args.tgt, args.align)
    records = sample_corpus_constraints(corpus, cfg.seed, cfg.max_constraints, cfg.max_phrase_len,
                                        cfg.min_constraints)
    write_constraint_file(args.out, records)


def cmd_code_switch(args):
    cfg = _config(args)
    corpus = read_corpus(args.src, args.tgt)
    switched, records = code_switch_corpus(corpus, read_constraint_file(args.constraints), cfg.seed,
                                           cfg.code_switch_probability)
    prefix = args.out_prefix
    write_corpus(switched, f"{prefix}.src", f"{prefix}.tgt")
    write_constraint_file(f"{prefix}.constraints.jsonl", records)


def cmd_train(args):
    cfg = _config(args)
    bpe = load_bpe(args.bpe)
    corpus = read_corpus(args.src, args.tgt)
    csets, _ = _constraint_sets(args.constraints, bpe, len(corpus))
    examples = build_examples(encode_sentences(bpe, corpus.sources), encode_sentences(bpe, corpus.targets), csets)
    kept = [e for e in examples if max(len(e.source_ids), len(e.target_ids)) <= cfg.max_len]
    if len(kept) < len(examples):
        logger.warning("skipped %d sentence pairs longer than max_len %d", len(examples) - len(kept), cfg.max_len)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / RUN_CONFIG_NAME)
    model = ConstrainedTransformer(ModelParams.initialize(cfg.model_config(len(bpe.vocab)), cfg.seed),
                                   bpe.word_internal_ids)
    with MetricsLog(out / METRICS_NAME) as metrics:
        params, state, _ = train(cfg.train_config(), model, kept, metrics)
    save_checkpoint(params, state, out / CHECKPOINT_NAME)


def cmd_translate(args):
    bpe = load_bpe(args.bpe)
    cfg, model = _load_model(args, args.checkpoint, bpe)
    sources = read_lines(args.input)
    csets, _ = _constraint_sets(args.constraints, bpe, len(sources))
    results = translate_corpus(model, encode_sentences(bpe, sources), csets, cfg.decoder, cfg.beam_size,
                               cfg.decode_max_len, cfg.workers_in_use)
    lines = [debpe(bpe.vocab.decode(r.hypothesis.output_tokens(EOS_ID))) for r in results]
    write_lines(args.output, lines)


def cmd_evaluate(args):
    hypotheses = read_lines(args.hyp)
    references = read_lines(args.ref)
    constraints = read_constraint_file(args.constraints) if args.constraints else [[] for _ in hypotheses]
    report = evaluate_hypotheses(hypotheses, references, constraints)
    if args.train_constraints:
        report.overlap_ratio = constraint_overlap_ratio(read_constraint_file(args.train_constraints), constraints)
    if args.checkpoint:
        if not (args.bpe and args.src):
            raise ConfigError("--checkpoint needs --bpe and --src to score reference probabilities")
        bpe = load_bpe(args.bpe)
        _, model = _load_model(args, args.checkpoint, bpe)
        csets, _ = _constraint_sets(args.constraints, bpe, len(references))
        sources = encode_sentences(bpe, read_lines(args.src))
        targets = encode_sentences(bpe, references)
        examples = [Example.from_ids(s, t, c) for s, t, c in zip(sources, targets, csets)]
        report.avg_prob_all, report.avg_prob_constrained = prob_stats(model, examples)
    write_report(report, args.out)
    write_details(report, args.details or f"{args.out}.details.tsv", hypotheses)
    for key, value in report.summary().items():
        print(f"{key} = {value}")


def cmd_reproduce(args):
    from experiments.toy_study import run_study, trend_checks, write_study

    frame = run_study(_config(args))
    checks = trend_checks(frame)
    write_study(frame, checks, args.out)
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    print(checks.to_string(index=False, float_format=lambda v: f"{v:.4f}"))


def cmd_plot_metrics(args):
    from cli.plotting import plot_metrics

    plot_metrics(args.metrics, args.out)


def cmd_monitor(args):
    from gui.main_window import launch_monitor

    return launch_monitor(args.metrics)


# --- parser -------------------------------------------------------------------------

def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value run configuration file")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    group = common.add_argument_group("configuration overrides")
    for name, hint in field_types().items():
        flag = f"--{name.replace('_', '-')}"
        if hint is bool:
            group.add_argument(flag, dest=name, default=None, action=argparse.BooleanOptionalAction)
        else:
            group.add_argument(flag, dest=name, default=None, metavar="VALUE")
    return common


def build_parser():
    common = _common_parser()
    parser = UsageErrorParser(prog="main.py", description="Constraint-aware NMT lab")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageErrorParser)

    p = sub.add_parser("gen-toy", parents=[common], help="generate the synthetic parallel corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_gen_toy)

    p = sub.add_parser("learn-bpe", parents=[common], help="learn joint BPE merges")
    p.add_argument("--inputs", nargs="+", required=True, help="tokenized text files (both languages)")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_learn_bpe)

    p = sub.add_parser("sample-constraints", parents=[common], help="sample constraints from aligned phrase pairs")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--align", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_sample_constraints)

    p = sub.add_parser("code-switch", parents=[common], help="build a code-switched corpus")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--constraints", required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(handler=cmd_code_switch)

    p = sub.add_parser("train", parents=[common], help="two-stage training")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--bpe", required=True)
    p.add_argument("--constraints")
    p.add_argument("--out", required=True, help="run directory for checkpoint, config and metrics")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("translate", parents=[common], help="decode a source file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--bpe", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--constraints")
    p.add_argument("--output", required=True)
    p.set_defaults(handler=cmd_translate)

    p = sub.add_parser("evaluate", parents=[common], help="BLEU, copying success rate and probability stats")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--constraints")
    p.add_argument("--train-constraints")
    p.add_argument("--checkpoint")
    p.add_argument("--bpe")
    p.add_argument("--src")
    p.add_argument("--out", required=True)
    p.add_argument("--details")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("reproduce", parents=[common], help="run the toy-task study and write its results table")
    p.add_argument("--out", required=True, help="output directory for results.tsv and trends.tsv")
    p.set_defaults(handler=cmd_reproduce)

    p = sub.add_parser("plot-metrics", parents=[common], help="plot a metrics log to an image")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_plot_metrics)

    p = sub.add_parser("monitor", parents=[common], help="live training monitor window")
    p.add_argument("--metrics", required=True)
    p.set_defaults(handler=cmd_monitor)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=getattr(logging, args.log_level),
                            format="%(asctime)s %(levelname)s %(name)s: %(message)s")
        return args.handler(args) or 0
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (DataError, VocabularyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
