"""Binary classification metrics: confusion matrices, scalar scores, summaries.

The positive class is label 1 throughout. Zero denominators yield a score of
0 rather than an error, so degenerate members stay well-defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .corpus import ClassLabel
from .errors import ValidationError


class MetricKind(Enum):
    PRECISION = "precision"
    RECALL = "recall"
    F1 = "f1"
    ACCURACY = "accuracy"


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 tally for a binary task: tp/fp/fn/tn, positive class = 1."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValidationError(f"confusion matrix count {name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def actual_positives(self) -> int:
        return self.tp + self.fn

    @property
    def actual_negatives(self) -> int:
        return self.fp + self.tn


@dataclass(frozen=True)
class Score:
    """A single named metric value in [0, 1]."""

    metric: MetricKind
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValidationError(f"{self.metric.value} value {self.value} outside [0, 1]")


@dataclass(frozen=True)
class ScoreSummary:
    """Mean and sample standard deviation (n-1 denominator) of a score list."""

    mean: float
    stdev: float
    n: int


def confusion_matrix(
    predictions: dict[str, ClassLabel], labels: dict[str, ClassLabel]
) -> ConfusionMatrix:
    """Tally predictions against labels. Key sets must match exactly."""
    if not labels:
        raise ValidationError("cannot build a confusion matrix from an empty id set")
    pred_ids = set(predictions)
    label_ids = set(labels)
    if pred_ids != label_ids:
        missing = sorted(label_ids - pred_ids)
        extra = sorted(pred_ids - label_ids)
        parts = []
        if missing:
            parts.append(f"ids missing from predictions: {missing}")
        if extra:
            parts.append(f"ids not present in labels: {extra}")
        raise ValidationError("prediction/label id mismatch; " + "; ".join(parts))
    tp = fp = fn = tn = 0
    for example_id, truth in labels.items():
        predicted = predictions[example_id]
        if truth == ClassLabel.SELF_REPORTED:
            if predicted == ClassLabel.SELF_REPORTED:
                tp += 1
            else:
                fn += 1
        else:
            if predicted == ClassLabel.SELF_REPORTED:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator > 0 else 0.0


def score_from_confusion(cm: ConfusionMatrix, metric: MetricKind) -> Score:
    """Compute one scalar metric from a confusion matrix.

    precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = 2PR/(P+R),
    accuracy = (tp+tn)/total. A zero denominator gives 0.
    """
    if metric is MetricKind.PRECISION:
        value = _ratio(cm.tp, cm.tp + cm.fp)
    elif metric is MetricKind.RECALL:
        value = _ratio(cm.tp, cm.tp + cm.fn)
    elif metric is MetricKind.F1:
        precision = _ratio(cm.tp, cm.tp + cm.fp)
        recall = _ratio(cm.tp, cm.tp + cm.fn)
        value = f1_from_pr(precision, recall)
    elif metric is MetricKind.ACCURACY:
        value = _ratio(cm.tp + cm.tn, cm.total)
    else:
        raise ValidationError(f"unknown metric {metric!r}")
    return Score(metric=metric, value=value)


def all_scores(cm: ConfusionMatrix) -> list[Score]:
    """Precision, recall, F1 and accuracy, in that order."""
    return [
        score_from_confusion(cm, metric)
        for metric in (MetricKind.PRECISION, MetricKind.RECALL, MetricKind.F1, MetricKind.ACCURACY)
    ]


def f1_from_pr(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    for name, value in (("precision", precision), ("recall", recall)):
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"{name} {value} outside [0, 1]")
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def aggregate_scores(scores: list[float]) -> ScoreSummary:
    """Mean and sample stdev of a non-empty score list; n=1 gives stdev 0."""
    if not scores:
        raise ValidationError("cannot aggregate an empty score list")
    n = len(scores)
    mean = sum(scores) / n
    if n == 1:
        return ScoreSummary(mean=mean, stdev=0.0, n=1)
    variance = sum((s - mean) ** 2 for s in scores) / (n - 1)
    return ScoreSummary(mean=mean, stdev=math.sqrt(variance), n=n)


def render_confusion_grid(cm: ConfusionMatrix) -> str:
    """Render a 2x2 labeled text grid with row sums.

    Rows are the actual class, columns the predicted class; the trailing
    column shows per-class totals so they can be checked against the
    corpus's class counts.
    """
    width = max(5, *(len(str(v)) for v in (cm.tp, cm.fp, cm.fn, cm.tn)))
    head = f"{'':>12}  {'pred=1':>{width}}  {'pred=0':>{width}}  {'total':>{width}}"
    row1 = f"{'actual=1':>12}  {cm.tp:>{width}}  {cm.fn:>{width}}  {cm.actual_positives:>{width}}"
    row0 = f"{'actual=0':>12}  {cm.fp:>{width}}  {cm.tn:>{width}}  {cm.actual_negatives:>{width}}"
    return "\n".join([head, row1, row0])


def metric_rows(cm: ConfusionMatrix) -> list[tuple[str, str]]:
    """(name, value) rows for the machine-readable report TSV."""
    rows = [
        ("tp", str(cm.tp)),
        ("fp", str(cm.fp)),
        ("fn", str(cm.fn)),
        ("tn", str(cm.tn)),
    ]
    rows.extend((score.metric.value, repr(score.value)) for score in all_scores(cm))
    return rows
