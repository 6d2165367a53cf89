"""Run sequence-classification inference and emit probability TSVs.

The exporter is a one-way bridge: it loads a fine-tuned two-class
checkpoint, scores a corpus TSV, and writes the positive-class softmax
probability per example in the voting toolkit's interchange format. It
never trains. Outputs are deterministic for a fixed checkpoint on fixed
hardware (eval mode, no sampling).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import AutoConfig, AutoModelForSequenceClassification, AutoTokenizer

from softvote import LabeledCorpus, ProbabilityTable, load_corpus, save_probabilities

from .errors import ExportError

# Corpus TSV headers, as documented by the voting toolkit's file format.
_LABELED_HEADER = "id\ttext\tlabel"
_UNLABELED_HEADER = "id\ttext"

SOFTMAX_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ExportJob:
    """One checkpoint scored over one corpus into one output file."""

    checkpoint_dir: str
    corpus_path: str
    output_path: str
    max_length: int = 128
    device: str = "cpu"
    batch_size: int = 32
    member_id: str | None = None  # default: checkpoint directory name

    def __post_init__(self):
        if self.max_length < 1:
            raise ExportError(f"max_length must be >= 1, got {self.max_length}")
        if self.batch_size < 1:
            raise ExportError(f"batch_size must be >= 1, got {self.batch_size}")

    @property
    def resolved_member_id(self) -> str:
        if self.member_id is not None:
            return self.member_id
        return Path(self.checkpoint_dir).name


def _load_corpus_any(path: str) -> LabeledCorpus:
    # Sniff the header so both labeled and unlabeled corpora export.
    with open(path, "r", encoding="utf-8", newline="") as handle:
        first = handle.readline().rstrip("\n")
    labeled = first != _UNLABELED_HEADER
    return load_corpus(path, labeled=labeled)


def _load_checkpoint(job: ExportJob):
    config = AutoConfig.from_pretrained(job.checkpoint_dir)
    if config.num_labels != 2:
        raise ExportError(
            f"checkpoint {job.checkpoint_dir!r} declares {config.num_labels} output "
            "classes, expected exactly 2 (class index 1 = positive)"
        )
    tokenizer = AutoTokenizer.from_pretrained(job.checkpoint_dir)
    model = AutoModelForSequenceClassification.from_pretrained(job.checkpoint_dir)
    model.to(torch.device(job.device))
    model.eval()
    return tokenizer, model


def _encode(tokenizer, example, max_length: int):
    try:
        return tokenizer(example.text, truncation=True, max_length=max_length)
    except Exception as exc:
        raise ExportError(f"tokenization failed for id {example.id!r}: {exc}") from exc


def _forward(model, device, tokenizer, encodings) -> torch.Tensor:
    batch = tokenizer.pad(encodings, padding=True, return_tensors="pt")
    batch = {key: tensor.to(device) for key, tensor in batch.items()}
    with torch.no_grad():
        return model(**batch).logits


def export_probabilities(job: ExportJob) -> ProbabilityTable:
    """Score every corpus row and write the probability TSV.

    Rows come out in corpus order; ``prob_positive`` is the class-1 softmax
    output. The written file passes the voting toolkit's probability loader
    unchanged. Raises :class:`ExportError` for a non-binary head or for a
    tokenization/inference failure, naming the offending id.
    """
    corpus = _load_corpus_any(job.corpus_path)
    tokenizer, model = _load_checkpoint(job)
    device = torch.device(job.device)

    entries: dict[str, float] = {}
    examples = list(corpus)
    for start in range(0, len(examples), job.batch_size):
        chunk = examples[start : start + job.batch_size]
        encodings = [_encode(tokenizer, ex, job.max_length) for ex in chunk]
        try:
            logits = _forward(model, device, tokenizer, encodings)
        except Exception:
            # Re-run one by one so the error names the offending input.
            logits_rows = []
            for ex, encoding in zip(chunk, encodings):
                try:
                    logits_rows.append(_forward(model, device, tokenizer, [encoding]))
                except Exception as exc:
                    raise ExportError(
                        f"inference failed for id {ex.id!r}: {exc}"
                    ) from exc
            logits = torch.cat(logits_rows, dim=0)
        probs = torch.softmax(logits, dim=-1)
        sums = probs.sum(dim=-1)
        for ex, row_sum, p_positive in zip(chunk, sums.tolist(), probs[:, 1].tolist()):
            if abs(row_sum - 1.0) > SOFTMAX_TOLERANCE:
                raise ExportError(
                    f"softmax for id {ex.id!r} sums to {row_sum!r}, expected 1"
                )
            entries[ex.id] = float(p_positive)

    table = ProbabilityTable(member_id=job.resolved_member_id, entries=entries)
    save_probabilities(table, job.output_path)
    return table
