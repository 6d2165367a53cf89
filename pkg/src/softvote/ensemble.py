"""Weighted soft voting and hard majority voting over member probabilities.

The soft combination is a normalized linear blend: with per-member weights
``a_i`` and positive-class probabilities ``p_i`` the ensemble probability is
``sum(a_i * p_i) / sum(a_i)``. Weights are stored raw (unnormalized); the
denominator does the normalizing. Fitted weights are each member's
positive-class F1 on a validation corpus. Hard voting thresholds each member
at 0.5 and takes the modal label.

Tie rule, applied uniformly: an ensemble probability of exactly 0.5, or an
even vote split, predicts the positive class. A missed self-report costs
more than a false positive routed to review.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .corpus import ClassLabel, LabeledCorpus
from .errors import ParseError, ValidationError
from .metrics import (
    ConfusionMatrix,
    MetricKind,
    Score,
    all_scores,
    confusion_matrix,
    score_from_confusion,
)
from .tsvio import atomic_write_text, escape_field, iter_rows, unescape_field

SPEC_HEADER = "member_id\tweight"
VERDICT_HEADER = "id\tp_positive\tlabel"

DECISION_THRESHOLD = 0.5


@dataclass(frozen=True)
class ProbabilityTable:
    """One member's positive-class probability per example id."""

    member_id: str
    entries: dict[str, float]

    def __post_init__(self):
        coerced: dict[str, float] = {}
        for example_id, raw in self.entries.items():
            try:
                p = float(raw)
            except (TypeError, ValueError):
                p = float("nan")
            if not 0.0 <= p <= 1.0:
                raise ValidationError(
                    f"member {self.member_id!r}: probability for id {example_id!r} "
                    f"is {raw!r}, expected a value in [0, 1]"
                )
            coerced[example_id] = p
        object.__setattr__(self, "entries", coerced)

    def __len__(self) -> int:
        return len(self.entries)

    def hard_label(self, example_id: str) -> ClassLabel:
        """Threshold at 0.5; a probability of exactly 0.5 is positive."""
        return decide(self.entries[example_id])


@dataclass(frozen=True)
class EnsembleSpec:
    """Ordered members with parallel non-negative weights, not all zero."""

    members: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.members) != len(self.weights):
            raise ValidationError(
                f"{len(self.members)} members but {len(self.weights)} weights"
            )
        if len(self.members) == 0:
            raise ValidationError("an ensemble needs at least one member")
        if len(set(self.members)) != len(self.members):
            raise ValidationError("member ids must be unique")
        for member, weight in zip(self.members, self.weights):
            if not math.isfinite(weight) or weight < 0.0:
                raise ValidationError(f"member {member!r} has invalid weight {weight}")
        if sum(self.weights) <= 0.0:
            raise ValidationError(
                "all ensemble weights are zero; fall back to a hard majority vote"
            )

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class EnsembleVerdict:
    """The ensemble's call on one example."""

    id: str
    p_positive: float
    label: ClassLabel
    per_member: tuple[tuple[str, float, float], ...]  # (member_id, probability, weight)

    def __post_init__(self):
        if self.label != decide(self.p_positive):
            raise ValidationError(
                f"verdict for {self.id!r}: label {int(self.label)} contradicts "
                f"p_positive {self.p_positive}"
            )

    @property
    def p_negative(self) -> float:
        # Derived, never stored: the two class probabilities must sum to 1.
        return 1.0 - self.p_positive


def decide(p_positive: float) -> ClassLabel:
    """Pick the more probable class; exactly 0.5 goes to the positive class."""
    if not 0.0 <= p_positive <= 1.0:
        raise ValidationError(f"probability {p_positive!r} outside [0, 1]")
    if p_positive >= DECISION_THRESHOLD:
        return ClassLabel.SELF_REPORTED
    return ClassLabel.NON_SELF_REPORTED


def majority_vote(hard_predictions: list[ClassLabel]) -> ClassLabel:
    """Modal label of a non-empty vote list; an exact tie is positive."""
    if not hard_predictions:
        raise ValidationError("majority_vote needs at least one prediction")
    counts = Counter(hard_predictions)
    positives = counts[ClassLabel.SELF_REPORTED]
    negatives = counts[ClassLabel.NON_SELF_REPORTED]
    if positives >= negatives:
        return ClassLabel.SELF_REPORTED
    return ClassLabel.NON_SELF_REPORTED


def soft_predict_proba(spec: EnsembleSpec, probs: list[float]) -> float:
    """Weighted normalized blend of member probabilities.

    Returns ``sum(a_i * p_i) / sum(a_i)``, which always lies within
    [min(probs), max(probs)]. With equal weights this is the plain mean.
    """
    if len(probs) != len(spec):
        raise ValidationError(
            f"expected {len(spec)} probabilities (one per member), got {len(probs)}"
        )
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"probability {p!r} outside [0, 1]")
    weight_sum = sum(spec.weights)
    if weight_sum <= 0.0:
        raise ValidationError("ensemble weight sum must be positive")
    blended = sum(w * p for w, p in zip(spec.weights, probs))
    return blended / weight_sum


def _check_coverage(table: ProbabilityTable, ids: tuple[str, ...], exact: bool) -> None:
    table_ids = set(table.entries)
    wanted = set(ids)
    missing = sorted(wanted - table_ids)
    if missing:
        raise ValidationError(
            f"member {table.member_id!r} is missing probabilities for ids {missing[:10]}"
            + ("..." if len(missing) > 10 else "")
        )
    if exact:
        extra = sorted(table_ids - wanted)
        if extra:
            raise ValidationError(
                f"member {table.member_id!r} has probabilities for unknown ids {extra[:10]}"
                + ("..." if len(extra) > 10 else "")
            )


def member_validation_f1s(
    member_tables: list[ProbabilityTable], validation: LabeledCorpus
) -> list[float]:
    """Each member's positive-class F1 on the validation corpus.

    Members are thresholded at 0.5 (ties positive) and scored against the
    validation labels; tables must cover exactly the validation ids.
    """
    labels = validation.labels_by_id()
    f1s: list[float] = []
    for table in member_tables:
        _check_coverage(table, validation.ids, exact=True)
        predictions = {example_id: table.hard_label(example_id) for example_id in validation.ids}
        cm = confusion_matrix(predictions, labels)
        f1s.append(score_from_confusion(cm, MetricKind.F1).value)
    return f1s


def fit_weights(
    member_tables: list[ProbabilityTable], validation: LabeledCorpus
) -> EnsembleSpec:
    """Weight each member by its validation F1, preserving member order.

    All-zero F1s are an error rather than a silent equal-weight fallback:
    such members never found a true positive, and the caller should switch
    to a hard majority vote instead.
    """
    if not member_tables:
        raise ValidationError("fit_weights needs at least one member table")
    f1s = member_validation_f1s(member_tables, validation)
    return EnsembleSpec(
        members=tuple(table.member_id for table in member_tables),
        weights=tuple(f1s),
    )


def evaluate_ensemble(
    spec: EnsembleSpec,
    member_tables: list[ProbabilityTable],
    labeled: LabeledCorpus,
    mode: str = "soft",
) -> tuple[list[EnsembleVerdict], ConfusionMatrix, list[Score]]:
    """Run the ensemble over a labeled corpus and score it.

    ``soft`` blends probabilities with the spec weights and thresholds the
    blend; ``hard`` thresholds each member first and takes the majority
    vote (weights unused; the verdict probability is the positive-vote
    fraction, which reproduces the same tie rule). Verdicts come back in
    corpus order.
    """
    if mode not in ("soft", "hard"):
        raise ValidationError(f"mode must be 'soft' or 'hard', got {mode!r}")
    tables_by_id = {table.member_id: table for table in member_tables}
    if len(tables_by_id) != len(member_tables):
        raise ValidationError("member tables have duplicate member ids")
    ordered_tables = []
    for member in spec.members:
        if member not in tables_by_id:
            raise ValidationError(f"no probability table for ensemble member {member!r}")
        table = tables_by_id[member]
        _check_coverage(table, labeled.ids, exact=False)
        ordered_tables.append(table)

    labels = labeled.labels_by_id()
    verdicts: list[EnsembleVerdict] = []
    for example_id in labeled.ids:
        probs = [table.entries[example_id] for table in ordered_tables]
        per_member = tuple(
            (member, p, weight)
            for member, p, weight in zip(spec.members, probs, spec.weights)
        )
        if mode == "soft":
            p_positive = soft_predict_proba(spec, probs)
            label = decide(p_positive)
        else:
            votes = [decide(p) for p in probs]
            label = majority_vote(votes)
            p_positive = sum(int(v) for v in votes) / len(votes)
        verdicts.append(
            EnsembleVerdict(id=example_id, p_positive=p_positive, label=label, per_member=per_member)
        )

    predictions = {verdict.id: verdict.label for verdict in verdicts}
    cm = confusion_matrix(predictions, labels)
    return verdicts, cm, all_scores(cm)


def save_ensemble_spec(spec: EnsembleSpec, path: str | Path) -> None:
    lines = [SPEC_HEADER]
    lines.extend(
        f"{escape_field(member)}\t{repr(weight)}"
        for member, weight in zip(spec.members, spec.weights)
    )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_ensemble_spec(path: str | Path) -> EnsembleSpec:
    members: list[str] = []
    weights: list[float] = []
    for lineno, fields in iter_rows(path, SPEC_HEADER, 2):
        try:
            members.append(unescape_field(fields[0]))
            weights.append(float(fields[1]))
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path), line=lineno) from exc
    return EnsembleSpec(members=tuple(members), weights=tuple(weights))


def save_verdicts(verdicts: list[EnsembleVerdict], path: str | Path) -> None:
    lines = [VERDICT_HEADER]
    lines.extend(
        f"{escape_field(v.id)}\t{repr(v.p_positive)}\t{int(v.label)}" for v in verdicts
    )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_verdicts(path: str | Path) -> list[EnsembleVerdict]:
    verdicts: list[EnsembleVerdict] = []
    seen: set[str] = set()
    for lineno, fields in iter_rows(path, VERDICT_HEADER, 3):
        try:
            example_id = unescape_field(fields[0])
            p_positive = float(fields[1])
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path), line=lineno) from exc
        if fields[2] not in ("0", "1"):
            raise ValidationError(
                f"{path}:{lineno}: label must be the literal 0 or 1, found {fields[2]!r}"
            )
        if example_id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate verdict id {example_id!r}")
        seen.add(example_id)
        verdicts.append(
            EnsembleVerdict(
                id=example_id,
                p_positive=p_positive,
                label=ClassLabel(int(fields[2])),
                per_member=(),
            )
        )
    return verdicts
