import pytest
import torch
from transformers import BertConfig, BertForSequenceClassification, BertTokenizer

from softvote import ClassLabel, LabeledCorpus, LabeledExample, save_corpus

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]",
    "hit", "scared", "hurt", "afraid", "yelled", "unsafe",
    "news", "report", "study", "today", "campaign", "policy",
    "the", "a", "really", "never", "time", "people", "again", "still",
]


def build_checkpoint(directory, seed=0, num_labels=2, positive_bias=0.4):
    """Write a tiny self-contained two-class checkpoint (model + tokenizer)."""
    directory.mkdir(parents=True, exist_ok=True)
    vocab_file = directory / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(vocab_file=str(vocab_file))
    tokenizer.save_pretrained(directory)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=64,
        num_labels=num_labels,
        pad_token_id=0,
    )
    torch.manual_seed(seed)
    model = BertForSequenceClassification(config)
    if num_labels == 2:
        # nudge the head so a random-weight checkpoint still votes positive
        # often enough to exercise F1-weight fitting downstream
        with torch.no_grad():
            model.classifier.bias[1] += positive_bias
    model.save_pretrained(directory)
    return directory


ROWS = [
    ("r0", "scared and hurt again", 1),
    ("r1", "really afraid tonight", 1),
    ("r2", "unsafe at home yelled", 1),
    ("r3", "hit never felt this afraid", 1),
    ("r4", "news report out today", 0),
    ("r5", "study on policy trends", 0),
    ("r6", "campaign starts today", 0),
    ("r7", "the report people share", 0),
    ("r8", "still reading the news", 0),
    ("r9", "a really long study", 0),
]


def write_corpus(path, rows=ROWS, labeled=True):
    examples = tuple(
        LabeledExample(id=row_id, text=text, label=ClassLabel(label) if labeled else None)
        for row_id, text, label in rows
    )
    save_corpus(LabeledCorpus(examples=examples, split_name=path.stem), path)
    return path


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    return build_checkpoint(tmp_path_factory.mktemp("ckpt") / "hf0", seed=0)


@pytest.fixture(scope="session")
def three_label_checkpoint(tmp_path_factory):
    return build_checkpoint(tmp_path_factory.mktemp("ckpt3") / "hf3", seed=0, num_labels=3)
