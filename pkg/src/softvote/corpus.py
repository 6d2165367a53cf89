"""Labeled text corpora: ingestion, validation, summaries and splits.

Corpus files are TSV with a header row: ``id<TAB>text<TAB>label`` for
labeled corpora, ``id<TAB>text`` for unlabeled ones. The label column holds
the literal character ``0`` or ``1``. Text is stored verbatim; embedded
tabs/newlines are escaped per :mod:`softvote.tsvio`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .tsvio import atomic_write_text, escape_field, iter_rows, unescape_field

LABELED_HEADER = "id\ttext\tlabel"
UNLABELED_HEADER = "id\ttext"


class ClassLabel(IntEnum):
    """Binary class of an example. 1 is the positive class for every metric."""

    NON_SELF_REPORTED = 0
    SELF_REPORTED = 1


@dataclass(frozen=True)
class LabeledExample:
    """One text example with its id and (possibly unknown) class label."""

    id: str
    text: str
    label: ClassLabel | None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("example id must be non-empty")
        if not self.text.strip():
            raise ValidationError(f"example {self.id!r} has empty text")


@dataclass(frozen=True)
class LabeledCorpus:
    """An ordered, duplicate-free collection of examples."""

    examples: tuple[LabeledExample, ...]
    split_name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        seen: set[str] = set()
        for ex in self.examples:
            if ex.id in seen:
                raise ValidationError(f"duplicate example id {ex.id!r}")
            seen.add(ex.id)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(ex.id for ex in self.examples)

    @property
    def is_labeled(self) -> bool:
        return all(ex.label is not None for ex in self.examples)

    def labels_by_id(self) -> dict[str, ClassLabel]:
        if not self.is_labeled:
            raise ValidationError(f"corpus {self.split_name!r} is not fully labeled")
        return {ex.id: ex.label for ex in self.examples}


@dataclass(frozen=True)
class ClassDistribution:
    """Class counts for one corpus; positive_rate = positives / total."""

    negatives: int
    positives: int
    total: int = field(init=False)
    positive_rate: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.negatives + self.positives)
        if self.total <= 0:
            raise ValidationError("class distribution over an empty corpus")
        object.__setattr__(self, "positive_rate", self.positives / self.total)


def _parse_label(raw: str, path: str, lineno: int) -> ClassLabel:
    if raw == "0":
        return ClassLabel.NON_SELF_REPORTED
    if raw == "1":
        return ClassLabel.SELF_REPORTED
    raise ValidationError(f"{path}:{lineno}: label must be the literal 0 or 1, found {raw!r}")


def load_corpus(path: str | Path, labeled: bool = True, split_name: str | None = None) -> LabeledCorpus:
    """Load a corpus TSV.

    With ``labeled=False`` the label column must be absent and every example
    gets an explicit unknown label (``None``). Raises :class:`ParseError` on
    malformed rows (with line number) and :class:`ValidationError` on
    duplicate ids or labels outside {0, 1}.
    """
    path = Path(path)
    header = LABELED_HEADER if labeled else UNLABELED_HEADER
    n_columns = 3 if labeled else 2
    examples: list[LabeledExample] = []
    seen: set[str] = set()
    for lineno, fields in iter_rows(path, header, n_columns):
        try:
            example_id = unescape_field(fields[0])
            text = unescape_field(fields[1])
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path), line=lineno) from exc
        label = _parse_label(fields[2], str(path), lineno) if labeled else None
        if example_id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate example id {example_id!r}")
        seen.add(example_id)
        try:
            examples.append(LabeledExample(id=example_id, text=text, label=label))
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    name = split_name if split_name is not None else path.stem
    return LabeledCorpus(examples=tuple(examples), split_name=name)


def save_corpus(corpus: LabeledCorpus, path: str | Path) -> None:
    """Write a corpus back to TSV (labeled iff every example has a label).

    Round-trip contract: ``load_corpus(save_corpus(c)) == c`` bit-exactly.
    """
    labeled = corpus.is_labeled
    lines = [LABELED_HEADER if labeled else UNLABELED_HEADER]
    for ex in corpus.examples:
        cells = [escape_field(ex.id), escape_field(ex.text)]
        if labeled:
            cells.append(str(int(ex.label)))
        lines.append("\t".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def corpus_stats(corpus: LabeledCorpus) -> ClassDistribution:
    """Tally the class distribution of a labeled corpus."""
    if len(corpus) == 0:
        raise ValidationError(f"corpus {corpus.split_name!r} is empty")
    if not corpus.is_labeled:
        raise ValidationError(f"corpus {corpus.split_name!r} has unlabeled examples")
    positives = sum(1 for ex in corpus if ex.label == ClassLabel.SELF_REPORTED)
    return ClassDistribution(negatives=len(corpus) - positives, positives=positives)


def stratified_split(
    corpus: LabeledCorpus, fraction: float, seed: int
) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Partition a labeled corpus into two parts, preserving class balance.

    The first part receives ``round(fraction * n)`` examples of each class,
    chosen by a seeded shuffle; both parts keep the corpus's original
    ordering. Deterministic for a fixed seed.
    """
    if not 0.0 < fraction < 1.0:
        raise ValidationError(f"fraction must be in (0, 1), got {fraction}")
    if not corpus.is_labeled:
        raise ValidationError("stratified_split needs a labeled corpus")
    by_class: dict[ClassLabel, list[int]] = {label: [] for label in ClassLabel}
    for index, ex in enumerate(corpus):
        by_class[ex.label].append(index)
    if any(not members for members in by_class.values()):
        raise ValidationError("stratified_split needs at least one example of each class")

    rng = np.random.default_rng(seed)
    first: set[int] = set()
    for label in sorted(by_class):
        indices = np.array(by_class[label])
        take = int(round(fraction * len(indices)))
        chosen = rng.permutation(len(indices))[:take]
        first.update(int(indices[i]) for i in chosen)

    part_a = [corpus.examples[i] for i in range(len(corpus)) if i in first]
    part_b = [corpus.examples[i] for i in range(len(corpus)) if i not in first]
    name = corpus.split_name
    return (
        LabeledCorpus(tuple(part_a), split_name=f"{name}:a"),
        LabeledCorpus(tuple(part_b), split_name=f"{name}:b"),
    )
