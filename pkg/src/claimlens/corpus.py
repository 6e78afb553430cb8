"""Labeled claim datasets: loading, validation, persistence, and splitting.

A dataset is an ordered, immutable list of :class:`ClaimRecord`. JSONL is the
canonical on-disk format (one record per line, diff-able and append-friendly);
CSV import maps columns by header name. All randomized operations draw their
randomness from an explicit seed so runs are replayable.
"""

from __future__ import annotations

import csv
import datetime
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

TRUE_LABEL = "true"
FAKE_LABEL = "fake"
LABELS = (FAKE_LABEL, TRUE_LABEL)

# The two source datasets use different label vocabularies; fold them all
# onto the canonical pair.
_LABEL_ALIASES = {
    "true": TRUE_LABEL,
    "real": TRUE_LABEL,
    "fake": FAKE_LABEL,
    "false": FAKE_LABEL,
}

_RECORD_FIELDS = ("id", "text", "label", "source", "date", "evidence", "parent_id")


class CorpusError(ValueError):
    """Raised when a dataset or record violates its contract."""


def normalize_label(token: str) -> str:
    """Map an accepted label token (case-insensitive) to its canonical form."""
    try:
        return _LABEL_ALIASES[token.strip().lower()]
    except KeyError:
        raise CorpusError(f"unknown label token: {token!r}") from None


@dataclass(frozen=True)
class ClaimRecord:
    """One labeled claim with optional provenance.

    ``parent_id`` is set on augmentation products and points at the original
    record, which must exist in the same dataset and carry the same label.
    """

    id: str
    text: str
    label: str
    source: Optional[str] = None
    date: Optional[str] = None
    evidence: Optional[str] = None
    parent_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("record id must be a non-empty string")
        if not self.text.strip():
            raise CorpusError(f"record {self.id!r}: text is empty")
        if self.label not in LABELS:
            raise CorpusError(f"record {self.id!r}: unknown label {self.label!r}")
        if self.date is not None:
            try:
                datetime.date.fromisoformat(self.date)
            except ValueError:
                raise CorpusError(
                    f"record {self.id!r}: date {self.date!r} is not ISO-8601"
                ) from None

    def to_dict(self) -> dict:
        out = {"id": self.id, "text": self.text, "label": self.label}
        for key in ("source", "date", "evidence", "parent_id"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of claim records with unique ids.

    Immutable after construction; safe to share read-only across threads.
    """

    records: tuple[ClaimRecord, ...]
    name: str = "dataset"

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        seen: dict[str, ClaimRecord] = {}
        for rec in self.records:
            if rec.id in seen:
                raise CorpusError(f"duplicate id: {rec.id!r}")
            seen[rec.id] = rec
        for rec in self.records:
            if rec.parent_id is not None:
                parent = seen.get(rec.parent_id)
                if parent is None:
                    raise CorpusError(
                        f"record {rec.id!r}: parent_id {rec.parent_id!r} not in dataset"
                    )
                if parent.label != rec.label:
                    raise CorpusError(
                        f"record {rec.id!r}: label {rec.label!r} differs from "
                        f"parent {rec.parent_id!r} label {parent.label!r}"
                    )
        object.__setattr__(self, "_by_id", seen)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def get(self, record_id: str) -> ClaimRecord:
        try:
            return self._by_id[record_id]  # type: ignore[attr-defined]
        except KeyError:
            raise CorpusError(f"no record with id {record_id!r}") from None

    def ids(self) -> list[str]:
        return [rec.id for rec in self.records]

    def class_counts(self) -> dict[str, int]:
        counts = {label: 0 for label in LABELS}
        for rec in self.records:
            counts[rec.label] += 1
        return counts

    def subset(self, ids: Iterable[str], name: Optional[str] = None) -> "Dataset":
        """Records for ``ids`` in dataset order. Parent links may dangle across
        a split, so products are re-rooted (parent_id dropped) when the parent
        is outside the subset."""
        wanted = set(ids)
        picked = []
        for rec in self.records:
            if rec.id not in wanted:
                continue
            if rec.parent_id is not None and rec.parent_id not in wanted:
                rec = ClaimRecord(
                    id=rec.id,
                    text=rec.text,
                    label=rec.label,
                    source=rec.source,
                    date=rec.date,
                    evidence=rec.evidence,
                )
            picked.append(rec)
        missing = wanted - {rec.id for rec in picked}
        if missing:
            raise CorpusError(f"ids not in dataset: {sorted(missing)[:10]}")
        return Dataset(tuple(picked), name=name or self.name)

    def require_both_labels(self) -> None:
        counts = self.class_counts()
        lacking = [label for label in LABELS if counts[label] == 0]
        if lacking:
            raise CorpusError(
                f"dataset {self.name!r} has no {'/'.join(lacking)} records; "
                "training operations need at least one record of each label"
            )


def _record_from_mapping(raw: dict, where: str) -> ClaimRecord:
    for required in ("id", "text", "label"):
        if required not in raw or raw[required] in (None, ""):
            raise CorpusError(f"{where}: missing required field {required!r}")
    unknown = set(raw) - set(_RECORD_FIELDS)
    if unknown:
        raise CorpusError(f"{where}: unknown fields {sorted(unknown)}")
    return ClaimRecord(
        id=str(raw["id"]),
        text=str(raw["text"]),
        label=normalize_label(str(raw["label"])),
        source=raw.get("source") or None,
        date=raw.get("date") or None,
        evidence=raw.get("evidence") or None,
        parent_id=raw.get("parent_id") or None,
    )


def load_dataset(path: str | Path, format: Optional[str] = None, name: Optional[str] = None) -> Dataset:
    """Load and validate a dataset from JSONL or CSV.

    ``format`` defaults to the file suffix. Record order is preserved.
    Errors report the offending line number.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"no such file: {path}")
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise CorpusError(f"unknown format: {format!r} (expected jsonl or csv)")

    records: list[ClaimRecord] = []
    if format == "jsonl":
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
                if not isinstance(raw, dict):
                    raise CorpusError(f"{path}:{lineno}: expected a JSON object")
                try:
                    records.append(_record_from_mapping(raw, f"{path}:{lineno}"))
                except CorpusError as exc:
                    raise CorpusError(f"{path}:{lineno}: {exc}") from None
    else:
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise CorpusError(f"{path}: empty CSV (header row required)")
            header = [h.strip() for h in reader.fieldnames]
            for required in ("id", "text", "label"):
                if required not in header:
                    raise CorpusError(f"{path}: CSV header lacks column {required!r}")
            for lineno, row in enumerate(reader, start=2):
                raw = {
                    key.strip(): value
                    for key, value in row.items()
                    if key is not None and key.strip() in _RECORD_FIELDS and value not in (None, "")
                }
                try:
                    records.append(_record_from_mapping(raw, f"{path}:{lineno}"))
                except CorpusError as exc:
                    raise CorpusError(f"{path}:{lineno}: {exc}") from None

    if not records:
        raise CorpusError(f"{path}: no records")
    return Dataset(tuple(records), name=name or path.stem)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write canonical JSONL: one compact record object per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in dataset.records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class SplitPlan:
    """A k-way partition of a dataset's ids.

    Folds are pairwise disjoint, their union is the full id set, and under
    stratification every fold's per-class count is within one record of the
    proportional share.
    """

    folds: tuple[tuple[str, ...], ...]
    seed: int
    stratified: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "folds", tuple(tuple(f) for f in self.folds))

    @property
    def k(self) -> int:
        return len(self.folds)

    def train_ids(self, fold_index: int) -> list[str]:
        out: list[str] = []
        for j, fold in enumerate(self.folds):
            if j != fold_index:
                out.extend(fold)
        return out

    def test_ids(self, fold_index: int) -> list[str]:
        return list(self.folds[fold_index])


def stratified_kfold(dataset: Dataset, k: int, seed: int, stratified: bool = True) -> SplitPlan:
    """Partition the dataset's ids into k folds, deterministic per seed.

    Stratification shuffles each class independently and deals round-robin,
    so per-fold class counts deviate from the proportional share by at most
    one record.
    """
    n = len(dataset)
    if k < 2:
        raise CorpusError(f"k out of range: {k} (need k >= 2)")
    if k > n:
        raise CorpusError(f"k out of range: {k} exceeds dataset size {n}")

    rng = np.random.default_rng(seed)
    folds: list[list[str]] = [[] for _ in range(k)]
    if stratified:
        # one slot counter across classes, so total fold sizes stay within
        # one of each other even when a class count is far from a multiple of k
        slot = 0
        for label in LABELS:
            ids = [rec.id for rec in dataset.records if rec.label == label]
            for idx in rng.permutation(len(ids)):
                folds[slot % k].append(ids[idx])
                slot += 1
    else:
        ids = dataset.ids()
        for slot, idx in enumerate(rng.permutation(n)):
            folds[slot % k].append(ids[idx])
    return SplitPlan(tuple(tuple(f) for f in folds), seed=seed, stratified=stratified)
