"""Seeded synthetic corpora for desk-scale pipeline runs and demos.

Generated texts mix a shared filler vocabulary with class-correlated signal
tokens. Noise enters at the token level: each signal token is drawn from the
wrong class's vocabulary with the configured probability, so texts stay
predictive of their labels in aggregate while individual examples can carry
contradictory evidence.
"""

from __future__ import annotations

import numpy as np

from .corpus import ClassLabel, LabeledCorpus, LabeledExample
from .errors import ValidationError

SHARED_TOKENS = (
    "the", "a", "today", "about", "this", "just", "really", "time", "people",
    "know", "think", "never", "always", "still", "one", "day", "even", "more",
    "like", "when",
)

POSITIVE_TOKENS = (
    "hit", "scared", "bruise", "hurt", "afraid", "yelled", "grabbed",
    "slapped", "threatened", "controlling", "abusive", "terrified", "escape",
    "crying", "unsafe", "trapped",
)

NEGATIVE_TOKENS = (
    "news", "article", "study", "report", "awareness", "campaign",
    "statistics", "research", "program", "policy", "resources", "survey",
    "headline", "media", "coverage", "charity",
)


def make_synthetic_corpus(
    n: int,
    split_name: str,
    seed: int,
    positive_rate: float = 0.11,
    noise: float = 0.2,
    min_tokens: int = 8,
    max_tokens: int = 18,
    filler_rate: float = 0.35,
) -> LabeledCorpus:
    """Generate a labeled corpus with an exact positive count.

    ``round(positive_rate * n)`` examples are positive; label order is a
    seeded shuffle. Each token is shared filler with probability
    ``filler_rate``, otherwise a signal token from the label's vocabulary,
    drawn from the opposite class's vocabulary with probability ``noise``.
    """
    if n < 1:
        raise ValidationError("synthetic corpus needs at least one example")
    if not 0.0 < positive_rate < 1.0:
        raise ValidationError(f"positive_rate must be in (0, 1), got {positive_rate}")
    if not 0.0 <= noise <= 1.0:
        raise ValidationError(f"noise must be in [0, 1], got {noise}")
    if not 0.0 <= filler_rate < 1.0:
        raise ValidationError(f"filler_rate must be in [0, 1), got {filler_rate}")

    rng = np.random.default_rng(seed)
    n_positive = int(round(positive_rate * n))
    labels = np.array([1] * n_positive + [0] * (n - n_positive), dtype=np.int64)
    rng.shuffle(labels)

    width = len(str(n - 1))
    examples: list[LabeledExample] = []
    for i, label_value in enumerate(labels):
        own, other = (
            (POSITIVE_TOKENS, NEGATIVE_TOKENS)
            if label_value == 1
            else (NEGATIVE_TOKENS, POSITIVE_TOKENS)
        )
        length = int(rng.integers(min_tokens, max_tokens + 1))
        tokens: list[str] = []
        for _ in range(length):
            if rng.random() < filler_rate:
                pool = SHARED_TOKENS
            elif rng.random() < noise:
                pool = other
            else:
                pool = own
            tokens.append(pool[int(rng.integers(len(pool)))])
        examples.append(
            LabeledExample(
                id=f"{split_name}-{i:0{width}d}",
                text=" ".join(tokens),
                label=ClassLabel(int(label_value)),
            )
        )
    return LabeledCorpus(examples=tuple(examples), split_name=split_name)
