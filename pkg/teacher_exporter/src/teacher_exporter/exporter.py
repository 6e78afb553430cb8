"""Produce teacher-target JSONL from a sequence-classification transformer.

The output contract is one line per input claim:

    {"id": "<claim id>", "p_true": <float in [0, 1]>, "logit": <float>}

where p_true = sigmoid(logit) and the id set equals the input id set
exactly. That file is the whole interface to the student-training side;
nothing from it is imported here.

Records are sorted by id before batching, for both fine-tuning and
inference, so the emitted probabilities do not depend on the ordering of
the input file. Fixed seeds reproduce a run on the same environment;
bit-exactness across accelerator hardware is not promised.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence


class ExporterError(ValueError):
    """Bad configuration, bad claims file, or an unloadable base model."""


_TRUE_LABELS = frozenset({"true", "real", "1"})
_FAKE_LABELS = frozenset({"fake", "false", "0"})


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    target: float  # 1.0 true, 0.0 fake


@dataclass(frozen=True)
class ExporterConfig:
    """Everything a run needs; defaults follow the fine-tuning recipe the
    student side was tuned against (AdamW, lr 3e-6, batch 12, 3 epochs).
    epochs=0 skips fine-tuning and exports the head as loaded."""

    base_model: str
    claims_path: str | Path
    out_path: str | Path
    learning_rate: float = 3e-6
    batch_size: int = 12
    epochs: int = 3
    max_length: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ExporterError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ExporterError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ExporterError("epochs must be >= 0")
        if self.max_length < 8:
            raise ExporterError("max_length must be >= 8")


@dataclass(frozen=True)
class ExportResult:
    out_path: Path
    n_claims: int
    epoch_losses: tuple[float, ...]  # mean training loss per epoch, empty when epochs=0


def load_claims(path: str | Path) -> list[Claim]:
    """Read a claims JSONL file: {"id", "text", "label"} per line, labels
    true/fake (real/false/0/1 accepted). Extra fields are ignored."""
    path = Path(path)
    if not path.exists():
        raise ExporterError(f"claims file not found: {path}")
    claims: list[Claim] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExporterError(f"{path}:{lineno}: not valid JSON: {exc}") from None
            for key in ("id", "text", "label"):
                if key not in obj:
                    raise ExporterError(f"{path}:{lineno}: missing field {key!r}")
            claim_id = obj["id"]
            if not isinstance(claim_id, str) or not claim_id:
                raise ExporterError(f"{path}:{lineno}: id must be a non-empty string")
            if claim_id in seen:
                raise ExporterError(f"{path}:{lineno}: duplicate id {claim_id!r}")
            seen.add(claim_id)
            label = str(obj["label"]).strip().lower()
            if label in _TRUE_LABELS:
                target = 1.0
            elif label in _FAKE_LABELS:
                target = 0.0
            else:
                raise ExporterError(f"{path}:{lineno}: unknown label {obj['label']!r}")
            claims.append(Claim(id=claim_id, text=str(obj["text"]), target=target))
    if not claims:
        raise ExporterError(f"{path}: no claims found")
    return claims


def _load_model(identifier: str):
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(identifier)
        model = AutoModelForSequenceClassification.from_pretrained(
            identifier, num_labels=1
        )
    except (OSError, EnvironmentError, ValueError) as exc:
        raise ExporterError(f"could not load base model {identifier!r}: {exc}") from None
    return tokenizer, model


def _encode(tokenizer, texts: Sequence[str], config: ExporterConfig):
    return tokenizer(
        list(texts),
        padding=True,
        truncation=True,
        max_length=config.max_length,
        return_tensors="pt",
    )


def _oom_hint(exc: RuntimeError, config: ExporterConfig) -> ExporterError:
    return ExporterError(
        f"out of memory at batch_size={config.batch_size}; retry with a "
        f"smaller --batch-size ({exc})"
    )


def _finetune(model, tokenizer, claims: list[Claim], config: ExporterConfig) -> tuple[float, ...]:
    import torch

    shuffler = torch.Generator().manual_seed(config.seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    loss_fn = torch.nn.BCEWithLogitsLoss()
    targets = torch.tensor([c.target for c in claims], dtype=torch.float32)
    losses = []
    model.train()
    for _ in range(config.epochs):
        order = torch.randperm(len(claims), generator=shuffler)
        total = 0.0
        for start in range(0, len(claims), config.batch_size):
            index = order[start : start + config.batch_size]
            batch = [claims[int(i)] for i in index]
            encoded = _encode(tokenizer, [c.text for c in batch], config)
            try:
                logits = model(**encoded).logits.squeeze(-1)
                loss = loss_fn(logits, targets[index])
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            except RuntimeError as exc:
                if "out of memory" in str(exc).lower():
                    raise _oom_hint(exc, config) from None
                raise
            total += float(loss.detach()) * len(batch)
        losses.append(total / len(claims))
    return tuple(losses)


def _predict_logits(model, tokenizer, claims: list[Claim], config: ExporterConfig) -> list[float]:
    import torch

    model.eval()
    logits: list[float] = []
    with torch.no_grad():
        for start in range(0, len(claims), config.batch_size):
            batch = claims[start : start + config.batch_size]
            encoded = _encode(tokenizer, [c.text for c in batch], config)
            try:
                out = model(**encoded).logits.squeeze(-1)
            except RuntimeError as exc:
                if "out of memory" in str(exc).lower():
                    raise _oom_hint(exc, config) from None
                raise
            logits.extend(float(v) for v in out.reshape(-1))
    return logits


def _atomic_write_targets(out_path: Path, claims: list[Claim], logits: list[float]) -> None:
    # p_true recomputed from the emitted logit in float64, so the pair on
    # each line is self-consistent to the last bit a reader can check
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = out_path.with_name(f"{out_path.name}.tmp-{os.getpid()}")
    lines = []
    for claim, logit in zip(claims, logits):
        p_true = 1.0 / (1.0 + math.exp(-logit))
        lines.append(json.dumps({"id": claim.id, "p_true": p_true, "logit": logit}))
    tmp_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp_path, out_path)


def finetune_and_export(config: ExporterConfig) -> ExportResult:
    """Optionally fine-tune the base model on the claims, then write one
    teacher-target line per claim. The output file appears atomically:
    either the previous content survives or the complete new file does."""
    import torch

    claims = sorted(load_claims(config.claims_path), key=lambda c: c.id)
    tokenizer, model = _load_model(config.base_model)
    torch.manual_seed(config.seed)
    epoch_losses: tuple[float, ...] = ()
    if config.epochs > 0:
        epoch_losses = _finetune(model, tokenizer, claims, config)
    logits = _predict_logits(model, tokenizer, claims, config)
    out_path = Path(config.out_path)
    _atomic_write_targets(out_path, claims, logits)
    return ExportResult(
        out_path=out_path, n_claims=len(claims), epoch_losses=epoch_losses
    )
