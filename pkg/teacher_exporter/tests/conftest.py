"""Shared fixtures: a tiny randomly initialized transformer saved to disk,
so every test runs offline, and a 20-claim smoke corpus."""

import json

import pytest

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "claim", "number", "was", "is", "by", "the", "a", "an", "of", "in",
    "verified", "confirmed", "peer", "review", "journal", "study", "report",
    "miracle", "secret", "shocking", "hoax", "cure", "rumor", "viral",
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
]

TRUE_TEMPLATES = (
    "claim number {} was verified by the journal",
    "claim number {} was confirmed in a peer review study",
)
FAKE_TEMPLATES = (
    "claim number {} was a shocking miracle cure",
    "claim number {} was a secret viral hoax",
)
DIGIT_WORDS = (
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
)


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    import torch
    from transformers import (
        BertTokenizerFast,
        DistilBertConfig,
        DistilBertForSequenceClassification,
    )

    model_dir = tmp_path_factory.mktemp("tiny-model")
    vocab_path = model_dir / "vocab.txt"
    vocab_path.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_path), do_lower_case=True)
    config = DistilBertConfig(
        vocab_size=len(VOCAB),
        dim=16,
        n_layers=1,
        n_heads=2,
        hidden_dim=32,
        max_position_embeddings=64,
        num_labels=1,
        # larger-than-default init so different inputs get visibly
        # different logits even before any fine-tuning
        initializer_range=0.25,
    )
    torch.manual_seed(1302)
    model = DistilBertForSequenceClassification(config)
    model.save_pretrained(model_dir)
    tokenizer.save_pretrained(model_dir)
    return model_dir


def smoke_rows() -> list[dict]:
    rows = []
    for i in range(20):
        label = "true" if i < 10 else "fake"
        templates = TRUE_TEMPLATES if label == "true" else FAKE_TEMPLATES
        text = templates[i % 2].format(DIGIT_WORDS[i % 10])
        rows.append({"id": f"smoke-{i:02d}", "text": text, "label": label})
    return rows


@pytest.fixture(scope="session")
def smoke_claims_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("claims") / "smoke.jsonl"
    path.write_text(
        "\n".join(json.dumps(row) for row in smoke_rows()) + "\n", encoding="utf-8"
    )
    return path
