"""Shared fixtures and independently written oracles.

The oracles here deliberately use a different formulation (and plain-Python
arithmetic) than the library code they check: Shapley values via the
permutation average rather than the weighted-subset sum, AUC via the O(n^2)
pairwise concordance count rather than ranks, gradients via central finite
differences. Tests compare library output against these.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np
import pytest

from claimlens import (
    ClaimRecord,
    Dataset,
    ForestModel,
    LogisticModel,
    TreeModel,
    load_bundled_corpus,
)

# ---------------------------------------------------------------------------
# Independent model evaluation (pure Python, scalar arithmetic)
# ---------------------------------------------------------------------------

_CLAMP = 1e-12


def py_logodds(model, vec: Sequence[float]) -> float:
    """Log-odds of p_true via scalar arithmetic, no numpy vectorization."""
    if isinstance(model, LogisticModel):
        total = model.bias
        for w, v in zip(model.weights, vec):
            total += float(w) * float(v)
        return float(total)
    if isinstance(model, TreeModel):
        node = 0
        while model.feature[node] >= 0:
            if vec[model.feature[node]] <= model.threshold[node]:
                node = int(model.left[node])
            else:
                node = int(model.right[node])
        p = min(max(float(model.value[node]), _CLAMP), 1.0 - _CLAMP)
        return math.log(p / (1.0 - p))
    if isinstance(model, ForestModel):
        return sum(py_logodds(t, vec) for t in model.trees) / len(model.trees)
    raise TypeError(type(model).__name__)


def coalition_oracle(model, x, bg_rows, subset: Sequence[int]) -> float:
    """Centered interventional value of a coalition by direct averaging.

    For every background row, features in the subset take the instance's
    values and the rest keep the row's values; the model's mean log-odds
    over those composites, minus the mean over the raw rows, is the value.
    """
    keep = set(int(i) for i in subset)
    total = 0.0
    base = 0.0
    for row in bg_rows:
        composite = [
            float(x[i]) if i in keep else float(row[i]) for i in range(len(x))
        ]
        total += py_logodds(model, composite)
        base += py_logodds(model, row)
    n = len(bg_rows)
    return total / n - base / n


def perm_shapley_oracle(model, x, bg_rows, n_features: int) -> np.ndarray:
    """Shapley values by averaging marginal gains over every permutation.

    Exponentially slower than any production method and structured
    differently (player orderings, not weighted subsets); usable for
    n_features <= 8 or so.
    """
    phi = [0.0] * n_features
    perms = list(itertools.permutations(range(n_features)))
    cache: dict[frozenset, float] = {}

    def value(subset: frozenset) -> float:
        if subset not in cache:
            cache[subset] = coalition_oracle(model, x, bg_rows, subset)
        return cache[subset]

    for perm in perms:
        before: frozenset = frozenset()
        for player in perm:
            after = before | {player}
            phi[player] += value(after) - value(before)
            before = after
    return np.array(phi) / len(perms)


# ---------------------------------------------------------------------------
# AUC and gradient oracles
# ---------------------------------------------------------------------------


def pairwise_auc_oracle(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Probability a random positive outranks a random negative; ties 0.5."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    if not pos or not neg:
        raise ValueError("need both classes")
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def central_diff_grad(
    f: Callable[[np.ndarray], float], theta: np.ndarray, step: float = 1e-5
) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    grad = np.zeros_like(theta, dtype=float)
    for i in range(theta.shape[0]):
        up = theta.copy()
        down = theta.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (f(up) - f(down)) / (2.0 * step)
    return grad


# ---------------------------------------------------------------------------
# Random model generators for property tests
# ---------------------------------------------------------------------------


def random_logistic(rng: np.random.Generator, n_features: int) -> LogisticModel:
    return LogisticModel(
        weights=rng.normal(0.0, 1.5, size=n_features),
        bias=float(rng.normal(0.0, 0.5)),
    )


def random_tree_model(
    rng: np.random.Generator, n_features: int, max_depth: int
) -> TreeModel:
    """Hand-built random tree: arbitrary thresholds, repeated features
    allowed along a path, so it is more adversarial than a trained tree."""
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def grow(depth: int) -> int:
        node = len(feature)
        feature.append(0)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        if depth >= max_depth or rng.random() < 0.25:
            feature[node] = -1
            value[node] = float(rng.uniform(0.05, 0.95))
            return node
        feature[node] = int(rng.integers(0, n_features))
        threshold[node] = float(rng.uniform(0.15, 0.85))
        left[node] = grow(depth + 1)
        right[node] = grow(depth + 1)
        return node

    grow(0)
    return TreeModel(
        feature=np.array(feature),
        threshold=np.array(threshold),
        left=np.array(left),
        right=np.array(right),
        value=np.array(value),
        max_depth=max_depth,
        dimension=n_features,
    )


# ---------------------------------------------------------------------------
# Dataset fixtures
# ---------------------------------------------------------------------------


def make_claim(i: int, text: str, label: str, **kwargs) -> ClaimRecord:
    return ClaimRecord(id=f"c{i}", text=text, label=label, **kwargs)


@pytest.fixture(scope="session")
def bundled_corpus() -> Dataset:
    return load_bundled_corpus()


@pytest.fixture()
def tiny_dataset() -> Dataset:
    records = (
        make_claim(1, "Verified study confirms the vaccine works", "true"),
        make_claim(2, "Miracle cure suppressed by doctors", "fake"),
        make_claim(3, "Peer reviewed journal confirms distancing helps", "true"),
        make_claim(4, "Secret shocking hoax behind the outbreak", "fake"),
        make_claim(5, "Confirmed data shows masks reduce spread", "true"),
        make_claim(6, "Shocking secret remedy they do not want known", "fake"),
    )
    return Dataset(records, name="tiny")


def write_jsonl(path, rows) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
