"""
Evaluation report: flat "key = value" summary plus a tab-separated per-sentence detail file.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import pandas as pd

from evaluation.bleu import corpus_bleu
from evaluation.csr import SentenceCoverage, csr, csr_details


@dataclass
class EvalReport:
    bleu: float
    csr: float
    sentences: List[SentenceCoverage] = field(default_factory=list)
    avg_prob_all: Optional[float] = None
    avg_prob_constrained: Optional[float] = None
    overlap_ratio: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.bleu <= 100.0 or not 0.0 <= self.csr <= 100.0:
            raise ValueError(f"scores out of range: bleu={self.bleu} csr={self.csr}")

    def summary(self):
        values = {
            "bleu": self.bleu,
            "csr": self.csr,
            "sentences": len(self.sentences),
            "constraints_total": sum(s.total for s in self.sentences),
            "constraints_met": sum(s.met for s in self.sentences),
            "avg_prob_all": self.avg_prob_all,
            "avg_prob_constrained": self.avg_prob_constrained,
            "overlap_ratio": self.overlap_ratio,
        }
        return {k: v for k, v in values.items() if v is not None}


def evaluate_hypotheses(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]],
                        constraints: Sequence[Sequence]) -> EvalReport:
    return EvalReport(bleu=corpus_bleu(hypotheses, references), csr=csr(hypotheses, constraints),
                      sentences=csr_details(hypotheses, constraints))


def _format(value):
    return f"{value:.4f}" if isinstance(value, float) else str(value)


def write_report(report: EvalReport, path):
    with open(path, "w", encoding="utf-8") as handle:
        for key, value in report.summary().items():
            handle.write(f"{key} = {_format(value)}\n")


def write_details(report: EvalReport, path, hypotheses: Optional[Sequence[Sequence[str]]] = None):
    frame = pd.DataFrame({
        "sentence": range(len(report.sentences)),
        "constraints_total": [s.total for s in report.sentences],
        "constraints_met": [s.met for s in report.sentences],
    })
    if hypotheses is not None:
        frame["hypothesis"] = [" ".join(h) for h in hypotheses]
    frame.to_csv(path, sep="\t", index=False)
