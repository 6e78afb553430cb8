"""Metrics, stratified cross-validation, and tabular reporting.

The positive class is the true-claim label throughout; per-class metrics
are reported for both classes because the false/fake side is the one a
misinformation screen cares about. Degenerate 0/0 ratios become 0.0 and
the affected metric names are flagged on the report rather than silently
averaged away.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .augment import DEFAULT_PIVOT, TranslationClient, augment_dataset
from .corpus import ClaimRecord, Dataset, FAKE_LABEL, TRUE_LABEL, stratified_kfold
from .models import (
    ForestConfig,
    TrainConfig,
    TreeConfig,
    predict_proba_batch,
    train_distilled,
    train_forest,
    train_logistic,
    train_tree,
)
from .teacher import TeacherError, TeacherTargets
from .textprep import TextPrepConfig, fit_vectorizer, tokenize, transform


class EvalError(ValueError):
    """Raised on metric/cross-validation contract violations."""


@dataclass(frozen=True)
class MetricsReport:
    """Classification quality summary, possibly aggregated over folds.

    Confusion counts treat the true-claim label as positive: tp are true
    claims called true, tn fake claims called fake. When the report comes
    from cross-validation, accuracy/auc/per-class values are macro means
    over folds, confusion counts are summed, and the per-fold reports are
    retained in folds.
    """

    model_name: str
    dataset_name: str
    augmented: bool
    accuracy: float
    auc: float
    precision_true: float
    recall_true: float
    f1_true: float
    precision_fake: float
    recall_fake: float
    f1_fake: float
    tp: int
    fp: int
    tn: int
    fn: int
    degenerate: tuple[str, ...] = ()
    folds: tuple[dict, ...] = ()

    @property
    def n_evaluated(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "dataset_name": self.dataset_name,
            "augmented": self.augmented,
            "accuracy": self.accuracy,
            "auc": self.auc,
            "precision_true": self.precision_true,
            "recall_true": self.recall_true,
            "f1_true": self.f1_true,
            "precision_fake": self.precision_fake,
            "recall_fake": self.recall_fake,
            "f1_fake": self.f1_fake,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "degenerate": list(self.degenerate),
            "folds": list(self.folds),
        }


def metrics_report_from_dict(payload: dict) -> MetricsReport:
    return MetricsReport(
        model_name=payload["model_name"],
        dataset_name=payload["dataset_name"],
        augmented=bool(payload["augmented"]),
        accuracy=float(payload["accuracy"]),
        auc=float(payload["auc"]),
        precision_true=float(payload["precision_true"]),
        recall_true=float(payload["recall_true"]),
        f1_true=float(payload["f1_true"]),
        precision_fake=float(payload["precision_fake"]),
        recall_fake=float(payload["recall_fake"]),
        f1_fake=float(payload["f1_fake"]),
        tp=int(payload["tp"]),
        fp=int(payload["fp"]),
        tn=int(payload["tn"]),
        fn=int(payload["fn"]),
        degenerate=tuple(payload.get("degenerate", ())),
        folds=tuple(payload.get("folds", ())),
    )


def _labels_array(labels: Sequence[str]) -> np.ndarray:
    out = np.empty(len(labels))
    for i, lab in enumerate(labels):
        if lab == TRUE_LABEL:
            out[i] = 1.0
        elif lab == FAKE_LABEL:
            out[i] = 0.0
        else:
            raise EvalError(f"unknown label {lab!r}")
    return out


def _safe_ratio(num: float, den: float, name: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def roc_auc(scores: Sequence[float], labels: Sequence[str]) -> float:
    """Probability a random true claim outscores a random fake one, with
    tied pairs counted half (Mann-Whitney). Exactly equals the pairwise
    concordance count divided by n_true * n_fake."""
    scores = np.asarray(scores, dtype=float)
    y = _labels_array(labels)
    if scores.shape[0] != y.shape[0]:
        raise EvalError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvalError("roc_auc requires both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.shape[0])
    sorted_scores = scores[order]
    i = 0
    while i < sorted_scores.shape[0]:
        j = i
        while j + 1 < sorted_scores.shape[0] and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # 1-based average rank for the tied block [i, j]
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[y == 1.0].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def classification_metrics(
    probabilities: Sequence[float],
    labels: Sequence[str],
    threshold: float = 0.5,
    model_name: str = "model",
    dataset_name: str = "dataset",
    augmented: bool = False,
) -> MetricsReport:
    """Thresholded confusion-table metrics plus AUC for one evaluation.

    Predictions with p_true >= threshold are called true. If only one class
    is present AUC is undefined; it is reported as 0.5 and flagged.
    """
    probs = np.asarray(probabilities, dtype=float)
    y = _labels_array(labels)
    if probs.shape[0] != y.shape[0]:
        raise EvalError("probabilities and labels differ in length")
    if probs.shape[0] == 0:
        raise EvalError("no predictions to score")

    pred = probs >= threshold
    actual = y == 1.0
    tp = int(np.sum(pred & actual))
    fp = int(np.sum(pred & ~actual))
    tn = int(np.sum(~pred & ~actual))
    fn = int(np.sum(~pred & actual))

    flags: list[str] = []
    precision_true = _safe_ratio(tp, tp + fp, "precision_true", flags)
    recall_true = _safe_ratio(tp, tp + fn, "recall_true", flags)
    f1_true = _safe_ratio(
        2 * precision_true * recall_true, precision_true + recall_true, "f1_true", flags
    )
    precision_fake = _safe_ratio(tn, tn + fn, "precision_fake", flags)
    recall_fake = _safe_ratio(tn, tn + fp, "recall_fake", flags)
    f1_fake = _safe_ratio(
        2 * precision_fake * recall_fake, precision_fake + recall_fake, "f1_fake", flags
    )
    accuracy = (tp + tn) / probs.shape[0]
    if actual.all() or not actual.any():
        flags.append("auc")
        auc = 0.5
    else:
        auc = roc_auc(probs, labels)

    return MetricsReport(
        model_name=model_name,
        dataset_name=dataset_name,
        augmented=augmented,
        accuracy=accuracy,
        auc=auc,
        precision_true=precision_true,
        recall_true=recall_true,
        f1_true=f1_true,
        precision_fake=precision_fake,
        recall_fake=recall_fake,
        f1_fake=f1_fake,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        degenerate=tuple(flags),
    )


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

AUGMENT_SCOPES = ("none", "train_folds_only", "whole_dataset")
MODEL_KINDS = ("logistic", "distilled", "tree", "forest")


@dataclass
class PipelineSpec:
    """Everything cross_validate needs to build one model per fold.

    augment_scope "train_folds_only" (the sound default when a client is
    set) back-translates each fold's training subset after the split, so
    no paraphrase of a held-out claim can leak into training.
    "whole_dataset" is the leaky pre-split variant, kept for comparison.
    """

    textprep: TextPrepConfig = field(default_factory=TextPrepConfig)
    model: str = "logistic"
    train: TrainConfig = field(default_factory=TrainConfig)
    tree: TreeConfig = field(default_factory=TreeConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    augment_scope: str = "none"
    augment_client: Optional[TranslationClient] = None
    augment_pivot: str = DEFAULT_PIVOT
    teacher: Optional[TeacherTargets] = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.model not in MODEL_KINDS:
            raise EvalError(f"unknown model kind {self.model!r}")
        if self.augment_scope not in AUGMENT_SCOPES:
            raise EvalError(f"unknown augmentation scope {self.augment_scope!r}")
        if self.augment_scope != "none" and self.augment_client is None:
            raise EvalError(f"augmentation scope {self.augment_scope!r} needs a client")
        if self.model == "distilled" and self.teacher is None:
            raise EvalError("distilled model needs teacher targets")
        if not self.name:
            self.name = self.model


def _teacher_aligned_with_parents(
    targets: TeacherTargets, records: Sequence[ClaimRecord]
) -> np.ndarray:
    """Teacher p_true per record; augmentation products inherit their
    parent's target when they have none of their own."""
    out = np.empty(len(records))
    missing: list[str] = []
    for i, rec in enumerate(records):
        if rec.id in targets:
            out[i] = targets.p_true(rec.id)
        elif rec.parent_id is not None and rec.parent_id in targets:
            out[i] = targets.p_true(rec.parent_id)
        else:
            missing.append(rec.id)
    if missing:
        shown = ", ".join(repr(i) for i in missing[:10])
        suffix = "" if len(missing) <= 10 else f" (and {len(missing) - 10} more)"
        raise TeacherError(
            f"teacher targets missing for {len(missing)} record(s): {shown}{suffix}"
        )
    return out


def _fit_for_spec(spec: PipelineSpec, X: np.ndarray, y: np.ndarray, records):
    if spec.model == "logistic":
        return train_logistic(X, y, spec.train)
    if spec.model == "distilled":
        teacher_p = _teacher_aligned_with_parents(spec.teacher, records)
        return train_distilled(X, y, teacher_p, spec.train)
    if spec.model == "tree":
        return train_tree(X, y, spec.tree)
    return train_forest(X, y, spec.forest)


def fit_pipeline(spec: PipelineSpec, dataset: Dataset):
    """Fit one vectorizer+model pair on a full dataset (no held-out fold).

    Applies augmentation first when the scope is not "none". Returns
    (vectorizer, model)."""
    train_ds = dataset
    if spec.augment_scope != "none" and spec.augment_client is not None:
        train_ds, _ = augment_dataset(
            train_ds, spec.augment_client, spec.augment_pivot, spec.augment_scope
        )
    token_lists = [tokenize(rec.text, spec.textprep) for rec in train_ds.records]
    vectorizer = fit_vectorizer(token_lists, spec.textprep)
    X = np.stack([transform(vectorizer, toks).to_dense() for toks in token_lists])
    y = np.array([1.0 if rec.label == TRUE_LABEL else 0.0 for rec in train_ds.records])
    model = _fit_for_spec(spec, X, y, train_ds.records)
    return vectorizer, model


def cross_validate(spec: PipelineSpec, dataset: Dataset, k: int, seed: int) -> MetricsReport:
    """Stratified k-fold evaluation of one pipeline.

    Each fold fits its own vectorizer and model on the training folds only;
    the held-out fold never influences the vocabulary, IDF weights, or (in
    the default scope) the augmentation products. Deterministic for fixed
    (spec, dataset, k, seed).
    """
    dataset.require_both_labels()
    if spec.augment_scope == "whole_dataset" and spec.augment_client is not None:
        dataset, _ = augment_dataset(
            dataset, spec.augment_client, spec.augment_pivot, "whole_dataset"
        )
    plan = stratified_kfold(dataset, k, seed)

    fold_reports: list[MetricsReport] = []
    for i in range(plan.k):
        train_ds = dataset.subset(plan.train_ids(i))
        test_ds = dataset.subset(plan.test_ids(i))
        if spec.augment_scope == "train_folds_only" and spec.augment_client is not None:
            train_ds, _ = augment_dataset(
                train_ds, spec.augment_client, spec.augment_pivot, "train_folds_only"
            )
        token_lists = [tokenize(rec.text, spec.textprep) for rec in train_ds.records]
        vectorizer = fit_vectorizer(token_lists, spec.textprep)
        X_train = np.stack([transform(vectorizer, t).to_dense() for t in token_lists])
        y_train = np.array(
            [1.0 if rec.label == TRUE_LABEL else 0.0 for rec in train_ds.records]
        )
        model = _fit_for_spec(spec, X_train, y_train, train_ds.records)

        X_test = np.stack(
            [
                transform(vectorizer, tokenize(rec.text, spec.textprep)).to_dense()
                for rec in test_ds.records
            ]
        )
        probs = predict_proba_batch(model, X_test)
        fold_reports.append(
            classification_metrics(
                probs,
                [rec.label for rec in test_ds.records],
                model_name=spec.name,
                dataset_name=dataset.name,
                augmented=spec.augment_scope != "none",
            )
        )

    return _aggregate_folds(spec, dataset, fold_reports)


def _aggregate_folds(
    spec: PipelineSpec, dataset: Dataset, fold_reports: list[MetricsReport]
) -> MetricsReport:
    def mean(attr: str) -> float:
        return float(np.mean([getattr(r, attr) for r in fold_reports]))

    flags: list[str] = []
    for r in fold_reports:
        for f in r.degenerate:
            if f not in flags:
                flags.append(f)
    fold_dicts = []
    for r in fold_reports:
        d = r.to_dict()
        d.pop("folds")
        fold_dicts.append(d)
    return MetricsReport(
        model_name=spec.name,
        dataset_name=dataset.name,
        augmented=spec.augment_scope != "none",
        accuracy=mean("accuracy"),
        auc=mean("auc"),
        precision_true=mean("precision_true"),
        recall_true=mean("recall_true"),
        f1_true=mean("f1_true"),
        precision_fake=mean("precision_fake"),
        recall_fake=mean("recall_fake"),
        f1_fake=mean("f1_fake"),
        tp=sum(r.tp for r in fold_reports),
        fp=sum(r.fp for r in fold_reports),
        tn=sum(r.tn for r in fold_reports),
        fn=sum(r.fn for r in fold_reports),
        degenerate=tuple(flags),
        folds=tuple(fold_dicts),
    )


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

REPORT_FORMATS = ("markdown", "csv", "json")
CSV_COLUMNS = [
    "model",
    "dataset",
    "augmented",
    "precision_false",
    "precision_true",
    "recall_false",
    "recall_true",
    "f1_false",
    "f1_true",
    "accuracy",
    "auc",
]


def render_report(reports: Sequence[MetricsReport], format: str = "markdown") -> str:
    """One row per model; paired False/True columns for the per-class
    metrics. The false column is the fake-claim class."""
    if format not in REPORT_FORMATS:
        raise EvalError(f"unknown report format {format!r}; expected one of {REPORT_FORMATS}")
    if format == "json":
        return json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in reports:
            writer.writerow(
                [
                    r.model_name,
                    r.dataset_name,
                    str(r.augmented).lower(),
                    f"{r.precision_fake:.4f}",
                    f"{r.precision_true:.4f}",
                    f"{r.recall_fake:.4f}",
                    f"{r.recall_true:.4f}",
                    f"{r.f1_fake:.4f}",
                    f"{r.f1_true:.4f}",
                    f"{r.accuracy:.4f}",
                    f"{r.auc:.4f}",
                ]
            )
        return buf.getvalue()
    header = (
        "| Model | Precision (False/True) | Recall (False/True) | "
        "F1 (False/True) | Accuracy | AUC |"
    )
    rule = "|---|---|---|---|---|---|"
    lines = [header, rule]
    for r in reports:
        name = r.model_name + (" +aug" if r.augmented else "")
        lines.append(
            f"| {name} | {r.precision_fake:.3f}/{r.precision_true:.3f} "
            f"| {r.recall_fake:.3f}/{r.recall_true:.3f} "
            f"| {r.f1_fake:.3f}/{r.f1_true:.3f} "
            f"| {r.accuracy:.3f} | {r.auc:.3f} |"
        )
    return "\n".join(lines) + "\n"
