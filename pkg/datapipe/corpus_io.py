"""
Plain-text corpus, Pharaoh alignment and constraint JSON-lines files.

Constraint file grammar: one line per source sentence, each a JSON array of
objects {"src": "<space separated words>", "tgt": "<space separated words>"};
an empty record is written as [].
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

from errors import ConstraintParseError, DataError


@dataclass(frozen=True)
class PhraseConstraint:
    source: tuple
    target: tuple

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "target", tuple(self.target))

    def as_record(self):
        return {"src": " ".join(self.source), "tgt": " ".join(self.target)}


@dataclass(frozen=True)
class AlignmentLinks:
    links: frozenset = frozenset()  # (i, j) pairs, source index -> target index

    def __post_init__(self):
        object.__setattr__(self, "links", frozenset((int(i), int(j)) for i, j in self.links))

    def __iter__(self):
        return iter(sorted(self.links))

    def __len__(self):
        return len(self.links)

    def validate(self, source_length, target_length):
        for i, j in self.links:
            if not (0 <= i < source_length and 0 <= j < target_length):
                raise DataError(f"alignment link {i}-{j} outside a {source_length}x{target_length} sentence pair")

    def to_pharaoh(self):
        return " ".join(f"{i}-{j}" for i, j in self)

    @classmethod
    def from_pharaoh(cls, line):
        links = []
        for item in line.split():
            left, sep, right = item.partition("-")
            if not sep or not left.isdigit() or not right.isdigit():
                raise DataError(f"malformed alignment link {item!r}")
            links.append((int(left), int(right)))
        return cls(frozenset(links))


@dataclass
class ParallelCorpus:
    sources: List[tuple]
    targets: List[tuple]
    alignments: Optional[List[AlignmentLinks]] = None

    def __post_init__(self):
        self.sources = [tuple(s) for s in self.sources]
        self.targets = [tuple(t) for t in self.targets]
        if len(self.sources) != len(self.targets):
            raise DataError(f"{len(self.sources)} source sentences but {len(self.targets)} target sentences")
        if self.alignments is not None:
            if len(self.alignments) != len(self.sources):
                raise DataError(f"{len(self.alignments)} alignment lines for {len(self.sources)} sentence pairs")
            for src, tgt, links in zip(self.sources, self.targets, self.alignments):
                links.validate(len(src), len(tgt))

    def __len__(self):
        return len(self.sources)

    def pairs(self):
        return list(zip(self.sources, self.targets))


def read_lines(path) -> List[tuple]:
    """Whitespace-tokenized sentences, one per line."""
    with open(path, "r", encoding="utf-8") as handle:
        return [tuple(line.split()) for line in handle.read().splitlines()]


def write_lines(path, sentences: Sequence[Sequence[str]]):
    with open(path, "w", encoding="utf-8") as handle:
        for sentence in sentences:
            handle.write(" ".join(sentence) + "\n")


def read_alignments(path) -> List[AlignmentLinks]:
    result = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle.read().splitlines(), start=1):
            try:
                result.append(AlignmentLinks.from_pharaoh(line))
            except DataError as e:
                raise DataError(f"{path}:{number}: {e}") from e
    return result


def write_alignments(path, alignments: Sequence[AlignmentLinks]):
    with open(path, "w", encoding="utf-8") as handle:
        for links in alignments:
            handle.write(links.to_pharaoh() + "\n")


def read_corpus(source_path, target_path, alignment_path=None) -> ParallelCorpus:
    alignments = read_alignments(alignment_path) if alignment_path else None
    return ParallelCorpus(read_lines(source_path), read_lines(target_path), alignments)


def write_corpus(corpus: ParallelCorpus, source_path, target_path, alignment_path=None):
    write_lines(source_path, corpus.sources)
    write_lines(target_path, corpus.targets)
    if alignment_path and corpus.alignments is not None:
        write_alignments(alignment_path, corpus.alignments)


def _phrase(record, key, number):
    value = record.get(key)
    if not isinstance(value, str) or not value.split():
        raise ConstraintParseError(number, f"field {key!r} must be a non-empty string")
    return tuple(value.split())


def parse_constraint_line(line, number) -> List[PhraseConstraint]:
    try:
        records = json.loads(line)
    except json.JSONDecodeError as e:
        raise ConstraintParseError(number, f"invalid JSON ({e.msg})") from e
    if not isinstance(records, list):
        raise ConstraintParseError(number, "expected a JSON array of constraint objects")
    phrases = []
    for record in records:
        if not isinstance(record, dict):
            raise ConstraintParseError(number, "constraint entries must be objects with 'src' and 'tgt'")
        phrases.append(PhraseConstraint(_phrase(record, "src", number), _phrase(record, "tgt", number)))
    return phrases


def read_constraint_file(path) -> List[List[PhraseConstraint]]:
    text = Path(path).read_text(encoding="utf-8")
    return [parse_constraint_line(line, number) for number, line in enumerate(text.splitlines(), start=1)]


def write_constraint_file(path, records: Sequence[Sequence[PhraseConstraint]]):
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps([p.as_record() for p in record], ensure_ascii=False) + "\n")
