"""F1-weighted soft-voting ensembles for binary text classification.

The package ensembles per-member positive-class probabilities, weighting each
member by its validation F1 score, and ships the surrounding toolkit: corpus
I/O, evaluation metrics, a hashed-feature logistic-regression member trainer
with best-epoch selection, and a deterministic CLI.
"""

from .corpus import (
    ClassDistribution,
    ClassLabel,
    LabeledCorpus,
    LabeledExample,
    corpus_stats,
    load_corpus,
    save_corpus,
    stratified_split,
)
from .ensemble import (
    DECISION_THRESHOLD,
    EnsembleSpec,
    EnsembleVerdict,
    ProbabilityTable,
    decide,
    evaluate_ensemble,
    fit_weights,
    load_ensemble_spec,
    load_verdicts,
    majority_vote,
    member_validation_f1s,
    save_ensemble_spec,
    save_verdicts,
    soft_predict_proba,
)
from .errors import ParseError, SoftvoteError, TrainingError, ValidationError
from .members import (
    HASH_DIM,
    EpochHistory,
    EpochRecord,
    FeatureVector,
    MemberModel,
    TrainConfig,
    featurize,
    load_external_probabilities,
    load_model,
    loss_and_gradient,
    predict_proba,
    save_model,
    save_probabilities,
    select_best_epoch,
    train_member,
)
from .metrics import (
    ConfusionMatrix,
    MetricKind,
    Score,
    ScoreSummary,
    aggregate_scores,
    all_scores,
    confusion_matrix,
    f1_from_pr,
    score_from_confusion,
)
from .synth import make_synthetic_corpus

__version__ = "0.1.0"

__all__ = [
    "ClassDistribution",
    "ClassLabel",
    "ConfusionMatrix",
    "DECISION_THRESHOLD",
    "EnsembleSpec",
    "EnsembleVerdict",
    "EpochHistory",
    "EpochRecord",
    "FeatureVector",
    "HASH_DIM",
    "LabeledCorpus",
    "LabeledExample",
    "MemberModel",
    "MetricKind",
    "ParseError",
    "ProbabilityTable",
    "Score",
    "ScoreSummary",
    "SoftvoteError",
    "TrainConfig",
    "TrainingError",
    "ValidationError",
    "aggregate_scores",
    "all_scores",
    "confusion_matrix",
    "corpus_stats",
    "decide",
    "evaluate_ensemble",
    "f1_from_pr",
    "featurize",
    "fit_weights",
    "load_corpus",
    "load_ensemble_spec",
    "load_external_probabilities",
    "load_model",
    "load_verdicts",
    "loss_and_gradient",
    "majority_vote",
    "make_synthetic_corpus",
    "member_validation_f1s",
    "predict_proba",
    "save_corpus",
    "save_ensemble_spec",
    "save_model",
    "save_probabilities",
    "save_verdicts",
    "score_from_confusion",
    "select_best_epoch",
    "soft_predict_proba",
    "stratified_split",
    "train_member",
    "__version__",
]
