"""Ingestion of teacher truth probabilities produced by an external scorer.

The file contract is JSONL: one object per line with a record "id", a
"p_true" probability in [0, 1], and an optional "logit" that must agree with
p_true through the logistic function to 1e-6. Every record of the dataset
being trained on must be covered; extra ids are tolerated (and recorded) so
one teacher file can serve many subsets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import Dataset

LOGIT_TOLERANCE = 1e-6


class TeacherError(ValueError):
    """Raised when a teacher-target file violates the contract."""


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@dataclass(frozen=True)
class TeacherTargets:
    """Validated map from record id to teacher p_true.

    metadata is free-form provenance (teacher name, creation date) supplied
    by the caller; the file format itself carries none.
    """

    probabilities: Mapping[str, float]
    source: Optional[str] = None
    extra_ids: tuple[str, ...] = ()
    logits: Mapping[str, float] = field(default_factory=dict)
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.probabilities)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self.probabilities

    def p_true(self, record_id: str) -> float:
        try:
            return self.probabilities[record_id]
        except KeyError:
            raise TeacherError(f"no teacher target for record {record_id!r}") from None

    def aligned(self, ids: Sequence[str]) -> np.ndarray:
        """Teacher probabilities in the order of the given ids."""
        missing = [i for i in ids if i not in self.probabilities]
        if missing:
            raise TeacherError(_missing_message(missing))
        return np.array([self.probabilities[i] for i in ids], dtype=float)


def _missing_message(missing: list[str]) -> str:
    shown = ", ".join(repr(i) for i in missing[:10])
    suffix = "" if len(missing) <= 10 else f" (and {len(missing) - 10} more)"
    return f"teacher targets missing for {len(missing)} record(s): {shown}{suffix}"


def _parse_line(line: str, lineno: int, path: str) -> tuple[str, float, Optional[float]]:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TeacherError(f"{path}:{lineno}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise TeacherError(f"{path}:{lineno}: expected a JSON object")
    if "id" not in obj or "p_true" not in obj:
        raise TeacherError(f"{path}:{lineno}: missing required key 'id' or 'p_true'")
    record_id = obj["id"]
    if not isinstance(record_id, str) or not record_id:
        raise TeacherError(f"{path}:{lineno}: 'id' must be a non-empty string")
    p = obj["p_true"]
    if not isinstance(p, (int, float)) or isinstance(p, bool) or not math.isfinite(p):
        raise TeacherError(f"{path}:{lineno}: 'p_true' must be a finite number")
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise TeacherError(
            f"{path}:{lineno}: p_true {p} outside [0, 1] for id {record_id!r}"
        )
    logit_value: Optional[float] = None
    if "logit" in obj and obj["logit"] is not None:
        lv = obj["logit"]
        if not isinstance(lv, (int, float)) or isinstance(lv, bool) or not math.isfinite(lv):
            raise TeacherError(f"{path}:{lineno}: 'logit' must be a finite number")
        logit_value = float(lv)
        if abs(_sigmoid(logit_value) - p) > LOGIT_TOLERANCE:
            raise TeacherError(
                f"{path}:{lineno}: logit {logit_value} disagrees with p_true {p} "
                f"for id {record_id!r} (|sigmoid(logit) - p_true| > {LOGIT_TOLERANCE})"
            )
    return record_id, p, logit_value


def ingest_teacher_targets(
    path: str | Path,
    dataset: Optional[Dataset] = None,
    required_ids: Optional[Iterable[str]] = None,
    metadata: Optional[Mapping[str, str]] = None,
) -> TeacherTargets:
    """Load and validate a teacher-target JSONL file.

    When a dataset (or explicit id collection) is given, coverage is
    enforced: a missing id is an error that names up to 10 offenders.
    Duplicate ids within the file are an error. Ids not in the dataset are
    recorded in extra_ids and otherwise ignored.
    """
    path = Path(path)
    if not path.exists():
        raise TeacherError(f"teacher target file not found: {path}")
    probs: dict[str, float] = {}
    logits: dict[str, float] = {}
    seen_any = False
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            seen_any = True
            record_id, p, logit_value = _parse_line(line, lineno, str(path))
            if record_id in probs:
                raise TeacherError(f"{path}:{lineno}: duplicate id {record_id!r}")
            probs[record_id] = p
            if logit_value is not None:
                logits[record_id] = logit_value
    if not seen_any:
        raise TeacherError(f"{path}: no teacher targets found")

    wanted: Optional[set[str]] = None
    if dataset is not None:
        wanted = set(dataset.ids())
    elif required_ids is not None:
        wanted = set(required_ids)

    extra: tuple[str, ...] = ()
    if wanted is not None:
        missing = sorted(wanted - probs.keys())
        if missing:
            raise TeacherError(_missing_message(missing))
        extra = tuple(sorted(probs.keys() - wanted))
    return TeacherTargets(
        probabilities=probs,
        source=str(path),
        extra_ids=extra,
        logits=logits,
        metadata=dict(metadata) if metadata else {},
    )


def write_teacher_targets(
    probabilities: Mapping[str, float],
    path: str | Path,
    logits: Optional[Mapping[str, float]] = None,
) -> None:
    """Write targets in the JSONL contract format (sorted by id)."""
    path = Path(path)
    lines = []
    for record_id in sorted(probabilities):
        obj: dict = {"id": record_id, "p_true": float(probabilities[record_id])}
        if logits and record_id in logits:
            obj["logit"] = float(logits[record_id])
        lines.append(json.dumps(obj, ensure_ascii=False))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
