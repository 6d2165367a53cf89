"""Native ensemble members: hashed n-gram logistic regression.

Members stand in for heavyweight encoder models at desk scale; the voting
and checkpoint-selection machinery upstream is member-agnostic, and
externally produced probability tables enter through
:func:`load_external_probabilities`.

Feature scheme: text is lowercased and split at Unicode whitespace and
punctuation; unigrams and bigrams (adjacent tokens joined by a space) are
hashed with 64-bit FNV-1a over their UTF-8 bytes into ``2**18`` buckets,
accumulating term frequencies. The hash is fixed and platform-independent,
so identical text always featurizes identically.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import ClassLabel, LabeledCorpus
from .ensemble import ProbabilityTable
from .errors import ParseError, TrainingError, ValidationError
from .metrics import MetricKind, confusion_matrix, score_from_confusion
from .tsvio import atomic_write_text, escape_field, iter_rows, read_lines, unescape_field

HASH_DIM = 2**18

PROB_HEADER = "id\tprob_positive"
MODEL_MAGIC = "softvote-model"
MODEL_VERSION = "v1"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF

# Probabilities are kept strictly inside (0, 1) at float64 resolution.
_P_LO = float(np.nextafter(0.0, 1.0))
_P_HI = float(np.nextafter(1.0, 0.0))

PROB_TOLERANCE = 1e-9


def _fnv1a(token: str) -> int:
    value = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        value = ((value ^ byte) * _FNV_PRIME) & _FNV_MASK
    return value


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    current: list[str] = []
    for char in text.lower():
        if char.isspace() or unicodedata.category(char).startswith("P"):
            if current:
                tokens.append("".join(current))
                current = []
        else:
            current.append(char)
    if current:
        tokens.append("".join(current))
    return tokens


@dataclass(frozen=True)
class FeatureVector:
    """Sparse term-frequency vector over the hashed n-gram space."""

    indices: np.ndarray  # int64, sorted ascending, unique
    values: np.ndarray  # float64, > 0

    def __len__(self) -> int:
        return len(self.indices)


def featurize(text: str) -> FeatureVector:
    """Hash a text's unigrams and bigrams into a sparse count vector."""
    tokens = _tokenize(text)
    grams = list(tokens)
    grams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    counts: dict[int, float] = {}
    for gram in grams:
        index = _fnv1a(gram) & (HASH_DIM - 1)
        counts[index] = counts.get(index, 0.0) + 1.0
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64)
    return FeatureVector(indices=indices, values=values)


@dataclass(frozen=True)
class MemberModel:
    """Linear scorer over the hashed feature space."""

    member_id: str
    weights: np.ndarray  # float64, length HASH_DIM
    bias: float

    def __post_init__(self):
        if self.weights.shape != (HASH_DIM,):
            raise ValidationError(
                f"model weights must have shape ({HASH_DIM},), got {self.weights.shape}"
            )
        if not (np.isfinite(self.weights).all() and math.isfinite(self.bias)):
            raise ValidationError(f"model {self.member_id!r} has non-finite parameters")

    def score(self, fv: FeatureVector) -> float:
        return float(self.weights[fv.indices] @ fv.values + self.bias)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 0.1
    l2: float = 1e-4
    seed: int = 0
    selection_metric: MetricKind = MetricKind.F1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValidationError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.l2 < 0:
            raise ValidationError(f"l2 must be >= 0, got {self.l2}")
        if self.selection_metric not in (MetricKind.F1, MetricKind.ACCURACY):
            raise ValidationError("selection metric must be F1 or accuracy")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    f1: float
    accuracy: float
    model: MemberModel


@dataclass(frozen=True)
class EpochHistory:
    """Per-epoch validation trace used for checkpoint selection."""

    member_id: str
    records: tuple[EpochRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for position, record in enumerate(self.records):
            if record.epoch != position:
                raise ValidationError("epoch indices must be contiguous from 0")
            for value in (record.f1, record.accuracy):
                if not 0.0 <= value <= 1.0:
                    raise ValidationError(f"epoch {record.epoch} metric {value} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.records)


def _sigmoid(score: float) -> float:
    if score >= 0:
        return 1.0 / (1.0 + math.exp(-score))
    exp_s = math.exp(score)
    return exp_s / (1.0 + exp_s)


def _softplus(score: float) -> float:
    # log(1 + e^s) without overflow for any float score
    return max(score, 0.0) + math.log1p(math.exp(-abs(score)))


def loss_and_gradient(
    model: MemberModel, batch: list[tuple[FeatureVector, ClassLabel]], l2: float
) -> tuple[float, np.ndarray]:
    """Mean logistic loss with an L2 penalty, and its exact gradient.

    The gradient vector has length ``HASH_DIM + 1``: weight coordinates
    first, bias last. The loss uses the log-sum-exp form of the
    log-sigmoid, stable for scores far beyond +/-1e3.
    """
    if not batch:
        raise ValidationError("loss_and_gradient needs a non-empty batch")
    m = len(batch)
    grad = np.zeros(HASH_DIM + 1, dtype=np.float64)
    grad[:HASH_DIM] = l2 * model.weights
    loss = 0.0
    for fv, label in batch:
        y = float(int(label))
        s = model.score(fv)
        loss += _softplus(s) - y * s
        residual = (_sigmoid(s) - y) / m
        np.add.at(grad, fv.indices, residual * fv.values)
        grad[HASH_DIM] += residual
    loss = loss / m + 0.5 * l2 * float(model.weights @ model.weights)
    if not math.isfinite(loss):
        raise TrainingError("non-finite loss")
    return loss, grad


def _validation_metrics(
    weights: np.ndarray, bias: float, features: list[FeatureVector], corpus: LabeledCorpus
) -> tuple[float, float]:
    predictions: dict[str, ClassLabel] = {}
    for ex, fv in zip(corpus, features):
        p = _sigmoid(float(weights[fv.indices] @ fv.values + bias))
        predictions[ex.id] = (
            ClassLabel.SELF_REPORTED if p >= 0.5 else ClassLabel.NON_SELF_REPORTED
        )
    cm = confusion_matrix(predictions, corpus.labels_by_id())
    f1 = score_from_confusion(cm, MetricKind.F1).value
    accuracy = score_from_confusion(cm, MetricKind.ACCURACY).value
    return f1, accuracy


def train_member(
    train: LabeledCorpus,
    validation: LabeledCorpus,
    config: TrainConfig,
    member_id: str = "member",
) -> tuple[MemberModel, EpochHistory]:
    """Train one member with seeded per-example SGD and pick its best epoch.

    Each epoch shuffles the training order with the seeded generator, applies
    per-example updates (L2 applied to the active coordinates), then records
    validation F1 and accuracy plus a parameter snapshot. The returned model
    is the snapshot chosen by :func:`select_best_epoch` for
    ``config.selection_metric``. Bit-deterministic for a fixed seed.
    """
    if not train.is_labeled or not validation.is_labeled:
        raise ValidationError("training and validation corpora must be labeled")
    train_labels = {int(ex.label) for ex in train}
    if train_labels != {0, 1}:
        raise TrainingError("training corpus must contain both classes")

    train_features = [featurize(ex.text) for ex in train]
    val_features = [featurize(ex.text) for ex in validation]
    targets = [float(int(ex.label)) for ex in train]

    rng = np.random.default_rng(config.seed)
    weights = np.zeros(HASH_DIM, dtype=np.float64)
    bias = 0.0
    lr = config.learning_rate
    l2 = config.l2

    records: list[EpochRecord] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_features))
        for j in order:
            fv = train_features[j]
            idx = fv.indices
            s = float(weights[idx] @ fv.values + bias)
            g = _sigmoid(s) - targets[j]
            weights[idx] -= lr * (g * fv.values + l2 * weights[idx])
            bias -= lr * g
        if not (np.isfinite(weights).all() and math.isfinite(bias)):
            raise TrainingError(
                f"member {member_id!r}: non-finite parameters after epoch {epoch}"
            )
        f1, accuracy = _validation_metrics(weights, bias, val_features, validation)
        snapshot = MemberModel(member_id=member_id, weights=weights.copy(), bias=bias)
        records.append(EpochRecord(epoch=epoch, f1=f1, accuracy=accuracy, model=snapshot))

    history = EpochHistory(member_id=member_id, records=tuple(records))
    best = select_best_epoch(history, config.selection_metric)
    return history.records[best].model, history


def select_best_epoch(history: EpochHistory, metric: MetricKind) -> int:
    """Index of the epoch maximizing the metric; ties go to the earliest."""
    if len(history) == 0:
        raise ValidationError("cannot select an epoch from an empty history")
    if metric is MetricKind.F1:
        values = [record.f1 for record in history.records]
    elif metric is MetricKind.ACCURACY:
        values = [record.accuracy for record in history.records]
    else:
        raise ValidationError("selection metric must be F1 or accuracy")
    best = 0
    for index, value in enumerate(values):
        if value > values[best]:
            best = index
    return best


def predict_proba(model: MemberModel, corpus: LabeledCorpus) -> ProbabilityTable:
    """Positive-class probability for every example, in corpus order.

    Values are clamped to the open interval (0, 1) at float64 resolution so
    downstream consumers never see a saturated 0 or 1.
    """
    entries: dict[str, float] = {}
    for ex in corpus:
        p = _sigmoid(model.score(featurize(ex.text)))
        entries[ex.id] = min(max(p, _P_LO), _P_HI)
    return ProbabilityTable(member_id=model.member_id, entries=entries)


def save_probabilities(table: ProbabilityTable, path: str | Path) -> None:
    """Write a probability TSV (header ``id<TAB>prob_positive``)."""
    lines = [PROB_HEADER]
    lines.extend(
        f"{escape_field(example_id)}\t{repr(p)}" for example_id, p in table.entries.items()
    )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_external_probabilities(
    path: str | Path, member_id: str | None = None
) -> ProbabilityTable:
    """Load a probability TSV produced by this toolkit or an external tool.

    Values that stray outside [0, 1] by at most ``1e-9`` are clamped (decimal
    round-trip noise); anything further out is an error naming the id. The
    member id defaults to the file stem.
    """
    path = Path(path)
    entries: dict[str, float] = {}
    for lineno, fields in iter_rows(path, PROB_HEADER, 2):
        try:
            example_id = unescape_field(fields[0])
            p = float(fields[1])
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path), line=lineno) from exc
        if not math.isfinite(p) or p < -PROB_TOLERANCE or p > 1.0 + PROB_TOLERANCE:
            raise ValidationError(
                f"{path}:{lineno}: probability {fields[1]} for id {example_id!r} "
                "outside [0, 1]"
            )
        if example_id in entries:
            raise ValidationError(f"{path}:{lineno}: duplicate id {example_id!r}")
        entries[example_id] = min(max(p, 0.0), 1.0)
    return ProbabilityTable(
        member_id=member_id if member_id is not None else path.stem, entries=entries
    )


def save_model(model: MemberModel, path: str | Path) -> None:
    """Write a model snapshot (versioned text container, round-trip exact)."""
    nonzero = np.nonzero(model.weights)[0]
    lines = [
        f"{MODEL_MAGIC}\t{MODEL_VERSION}",
        f"member_id\t{escape_field(model.member_id)}",
        f"dim\t{HASH_DIM}",
        f"bias\t{repr(model.bias)}",
        f"nnz\t{len(nonzero)}",
    ]
    lines.extend(f"{int(i)}\t{repr(float(model.weights[i]))}" for i in nonzero)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_model(path: str | Path) -> MemberModel:
    """Read a model snapshot written by :func:`save_model`."""
    path = Path(path)
    lines = read_lines(path)
    if not lines or lines[0] != f"{MODEL_MAGIC}\t{MODEL_VERSION}":
        raise ParseError(
            f"not a {MODEL_MAGIC} {MODEL_VERSION} snapshot", path=str(path), line=1
        )

    def header_field(lineno: int, key: str) -> str:
        if lineno >= len(lines):
            raise ParseError(f"missing {key} line", path=str(path), line=lineno + 1)
        cells = lines[lineno].split("\t")
        if len(cells) != 2 or cells[0] != key:
            raise ParseError(f"expected '{key}<TAB>...'", path=str(path), line=lineno + 1)
        return cells[1]

    try:
        member_id = unescape_field(header_field(1, "member_id"))
        dim = int(header_field(2, "dim"))
        bias = float(header_field(3, "bias"))
        nnz = int(header_field(4, "nnz"))
    except ValueError as exc:
        raise ParseError(str(exc), path=str(path)) from exc
    if dim != HASH_DIM:
        raise ValidationError(f"{path}: snapshot dimension {dim} != expected {HASH_DIM}")
    if len(lines) != 5 + nnz:
        raise ParseError(
            f"expected {nnz} weight rows, found {len(lines) - 5}", path=str(path)
        )
    weights = np.zeros(HASH_DIM, dtype=np.float64)
    for lineno, line in enumerate(lines[5:], start=6):
        cells = line.split("\t")
        if len(cells) != 2:
            raise ParseError("expected '<index><TAB><weight>'", path=str(path), line=lineno)
        try:
            index = int(cells[0])
            value = float(cells[1])
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path), line=lineno) from exc
        if not 0 <= index < HASH_DIM:
            raise ValidationError(f"{path}:{lineno}: weight index {index} out of range")
        weights[index] = value
    return MemberModel(member_id=member_id, weights=weights, bias=bias)
