"""Shapley attributions over word features, in log-odds space.

Every method explains the same quantity: the model's log-odds output
relative to a background population, so that

    base_logodds + sum(phi) == output_logodds

holds exactly (to float precision) for the exact methods. Coalition values
are interventional: computed by splicing instance features into background
rows, never by conditioning on a distribution.

For forests the attributed output is the mean of the per-tree log-odds (so
a forest's attribution is the mean of its trees' attributions); the
probability a forest reports elsewhere remains the mean of leaf
probabilities. Both the log-odds base and the mean predicted truth
probability are carried on every Attribution so renderers can show either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .models import (
    ForestModel,
    LogisticModel,
    Model,
    TreeModel,
    logit,
    predict_proba_batch,
)
from .textprep import FeatureVector, stack_features

MAX_EXACT_FEATURES = 20
EXACT_METHODS = ("linear_exact", "brute_force", "tree_interventional")


class ExplainError(ValueError):
    """Raised on attribution contract violations."""


def _as_matrix(rows) -> np.ndarray:
    if isinstance(rows, list) and rows and isinstance(rows[0], FeatureVector):
        return stack_features(rows)
    X = np.asarray(rows, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ExplainError("background rows must form a non-empty (n, V) matrix")
    return X


def _as_instance(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.to_dense()
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ExplainError("instance must be a single feature vector")
    return x


def model_logodds_batch(model: Model, X: np.ndarray) -> np.ndarray:
    """The attributed quantity g per row: logistic linear score, tree leaf
    log-odds, or mean of per-tree leaf log-odds for forests."""
    if isinstance(model, LogisticModel):
        return X @ model.weights + model.bias
    if isinstance(model, TreeModel):
        from .models import _tree_leaf_ids

        return logit(model.value[_tree_leaf_ids(model, X)])
    if isinstance(model, ForestModel):
        from .models import _tree_leaf_ids

        acc = np.zeros(X.shape[0])
        for tree in model.trees:
            acc += logit(tree.value[_tree_leaf_ids(tree, X)])
        return acc / len(model.trees)
    raise ExplainError(f"cannot attribute model type {type(model).__name__}")


def model_logodds(model: Model, x) -> float:
    return float(model_logodds_batch(model, _as_instance(x).reshape(1, -1))[0])


@dataclass(frozen=True)
class Background:
    """Reference population attributions are measured against.

    base_logodds is the mean log-odds output over the rows and
    base_probability the mean predicted truth probability; the two are
    stored separately because they are not sigmoid-related in general.
    """

    rows: np.ndarray
    feature_means: np.ndarray
    base_logodds: float
    base_probability: float

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def dimension(self) -> int:
        return self.rows.shape[1]


def build_background(model: Model, rows) -> Background:
    """Summarize reference rows (typically the training set) for a model."""
    X = _as_matrix(rows)
    if X.shape[1] != model.dimension:
        raise ExplainError(
            f"background dimension {X.shape[1]} does not match model dimension "
            f"{model.dimension}"
        )
    return Background(
        rows=X,
        feature_means=X.mean(axis=0),
        base_logodds=float(np.mean(model_logodds_batch(model, X))),
        base_probability=float(np.mean(predict_proba_batch(model, X))),
    )


def _ensure_background(model: Model, bg) -> Background:
    if isinstance(bg, Background):
        if bg.dimension != model.dimension:
            raise ExplainError(
                f"background dimension {bg.dimension} does not match model "
                f"dimension {model.dimension}"
            )
        return bg
    return build_background(model, bg)


@dataclass(frozen=True)
class Attribution:
    """Per-feature Shapley values phi for one instance, in log-odds units.

    phi has one entry per vocabulary dimension (exact zero for features
    that never mattered). samples and seed are set only by the sampling
    estimator.
    """

    phi: np.ndarray
    base_logodds: float
    output_logodds: float
    base_probability: float
    output_probability: float
    method: str
    samples: Optional[int] = None
    seed: Optional[int] = None

    @property
    def local_accuracy_gap(self) -> float:
        """Additivity residual |base + sum(phi) - output|; recorded, never
        forced to zero."""
        return abs(self.base_logodds + float(np.sum(self.phi)) - self.output_logodds)

    def top_features(self, k: int = 15) -> list[int]:
        """Indices of the k largest attributions by magnitude."""
        order = np.argsort(-np.abs(self.phi), kind="stable")
        return [int(i) for i in order[:k]]


@dataclass(frozen=True)
class CoalitionValue:
    """Centered interventional value of one feature subset:
    value = mean model output with the subset spliced in, minus the base."""

    subset: tuple[int, ...]
    value: float


def coalition_value(model: Model, x, bg, subset) -> CoalitionValue:
    """Evaluate one coalition directly (the quantity exact enumeration
    sums); value(empty) = 0 and value(all active) = output - base."""
    x = _as_instance(x)
    background = _ensure_background(model, bg)
    subset = tuple(sorted(int(i) for i in subset))
    composite = background.rows.copy()
    for i in subset:
        composite[:, i] = x[i]
    mean_out = float(np.mean(model_logodds_batch(model, composite)))
    return CoalitionValue(subset=subset, value=mean_out - background.base_logodds)


def used_features(model: Model) -> np.ndarray:
    """Feature indices the model's output can depend on."""
    if isinstance(model, LogisticModel):
        return np.nonzero(model.weights != 0.0)[0]
    if isinstance(model, TreeModel):
        return model.split_features()
    if isinstance(model, ForestModel):
        if not model.trees:
            return np.array([], dtype=int)
        return np.unique(np.concatenate([t.split_features() for t in model.trees]))
    raise ExplainError(f"cannot attribute model type {type(model).__name__}")


def active_features(model: Model, x: np.ndarray, background: Background) -> np.ndarray:
    """Features both used by the model and differing from at least one
    background row; all others are exact dummies with zero value."""
    varying = np.nonzero(np.any(background.rows != x[None, :], axis=0))[0]
    return np.intersect1d(used_features(model), varying)


def _check_instance(model: Model, x: np.ndarray) -> None:
    if x.shape[0] != model.dimension:
        raise ExplainError(
            f"instance dimension {x.shape[0]} does not match model dimension "
            f"{model.dimension}"
        )


def _finish(
    model: Model,
    x: np.ndarray,
    background: Background,
    phi: np.ndarray,
    method: str,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> Attribution:
    return Attribution(
        phi=phi,
        base_logodds=background.base_logodds,
        output_logodds=model_logodds(model, x),
        base_probability=background.base_probability,
        output_probability=float(predict_proba_batch(model, x.reshape(1, -1))[0]),
        method=method,
        samples=samples,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Linear closed form
# ---------------------------------------------------------------------------


def linear_shap(model: LogisticModel, x, bg) -> Attribution:
    """Exact Shapley values of a linear log-odds model:
    phi[i] = weights[i] * (x[i] - feature_means[i])."""
    if not isinstance(model, LogisticModel):
        raise ExplainError("linear_shap requires a logistic model")
    x = _as_instance(x)
    background = _ensure_background(model, bg)
    _check_instance(model, x)
    phi = model.weights * (x - background.feature_means)
    return _finish(model, x, background, phi, "linear_exact")


# ---------------------------------------------------------------------------
# Brute-force enumeration (any model)
# ---------------------------------------------------------------------------


def exact_shapley(model: Model, x, bg, max_features: int = MAX_EXACT_FEATURES) -> Attribution:
    """Interventional Shapley values by full coalition enumeration.

    Enumerates all subsets of the active features; the rest are dummies and
    receive exactly zero. Cost is 2^a background sweeps over a active
    features, refused above max_features.
    """
    x = _as_instance(x)
    background = _ensure_background(model, bg)
    _check_instance(model, x)
    active = active_features(model, x, background)
    a = active.shape[0]
    if a > max_features:
        raise ExplainError(
            f"{a} active features need 2^{a} coalitions, over the limit of "
            f"{max_features}; use sampling_shapley instead"
        )
    phi = np.zeros(model.dimension)
    if a == 0:
        return _finish(model, x, background, phi, "brute_force")

    n_masks = 1 << a
    v = np.empty(n_masks)
    for mask in range(n_masks):
        composite = background.rows.copy()
        for j in range(a):
            if mask >> j & 1:
                composite[:, active[j]] = x[active[j]]
        v[mask] = float(np.mean(model_logodds_batch(model, composite)))

    fact = [math.factorial(i) for i in range(a + 1)]
    weights = np.array([fact[s] * fact[a - s - 1] / fact[a] for s in range(a)])
    popcount = np.array([bin(m).count("1") for m in range(n_masks)])
    masks = np.arange(n_masks)
    for j in range(a):
        without = np.nonzero(((masks >> j) & 1) == 0)[0]
        gains = v[without | (1 << j)] - v[without]
        phi[active[j]] = float(np.sum(weights[popcount[without]] * gains))
    return _finish(model, x, background, phi, "brute_force")


# ---------------------------------------------------------------------------
# Interventional tree traversal (trees and forests)
# ---------------------------------------------------------------------------


def _leaf_paths(tree: TreeModel) -> list[tuple[float, dict[int, tuple[float, float]]]]:
    """All (leaf log-odds value, per-feature interval) pairs.

    A path's conditions on one feature merge into a half-open interval
    (low, high]: descent goes left at a node when x[f] <= threshold. Each
    feature appears once per path no matter how many nodes test it.
    """
    results: list[tuple[float, dict[int, tuple[float, float]]]] = []

    def walk(node: int, bounds: dict[int, tuple[float, float]]) -> None:
        f = int(tree.feature[node])
        if f < 0:
            results.append((logit(tree.value[node]), dict(bounds)))
            return
        thr = float(tree.threshold[node])
        low, high = bounds.get(f, (-math.inf, math.inf))
        left_bounds = dict(bounds)
        left_bounds[f] = (low, min(high, thr))
        walk(int(tree.left[node]), left_bounds)
        right_bounds = dict(bounds)
        right_bounds[f] = (max(low, thr), high)
        walk(int(tree.right[node]), right_bounds)

    walk(0, {})
    return results


def _tree_shap_single(tree: TreeModel, x: np.ndarray, background: np.ndarray) -> np.ndarray:
    """Exact interventional Shapley values for one tree, averaged over
    background rows, without enumerating coalitions.

    For a fixed background row, reaching a leaf under a coalition S
    requires every path feature drawn from x (those in S) to satisfy the
    leaf's interval and every feature drawn from the row (outside S) to do
    the same. That is a unanimity game with vetoes; the closed-form Shapley
    weights below sum over leaves and rows to the full model's values.
    """
    n_bg = background.shape[0]
    values = np.zeros(tree.dimension)
    paths = _leaf_paths(tree)
    max_path = max((len(bounds) for _, bounds in paths), default=0)
    fact = [math.factorial(i) for i in range(2 * max_path + 2)]
    # w_in[a, b]: weight of a feature that must join the coalition;
    # w_out[a, b]: weight of one that must stay out.
    w_in = np.zeros((max_path + 1, max_path + 1))
    w_out = np.zeros((max_path + 1, max_path + 1))
    for a_cnt in range(max_path + 1):
        for b_cnt in range(max_path + 1):
            if a_cnt + b_cnt == 0:
                continue
            denom = fact[a_cnt + b_cnt]
            if a_cnt > 0:
                w_in[a_cnt, b_cnt] = fact[a_cnt - 1] * fact[b_cnt] / denom
            if b_cnt > 0:
                w_out[a_cnt, b_cnt] = fact[a_cnt] * fact[b_cnt - 1] / denom

    for leaf_value, bounds in paths:
        if not bounds:
            continue
        feats = np.fromiter(bounds.keys(), dtype=int)
        lows = np.array([bounds[f][0] for f in feats])
        highs = np.array([bounds[f][1] for f in feats])
        x_ok = (x[feats] > lows) & (x[feats] <= highs)
        z_vals = background[:, feats]
        z_ok = (z_vals > lows[None, :]) & (z_vals <= highs[None, :])

        dead = np.any(~x_ok[None, :] & ~z_ok, axis=1)
        alive = ~dead
        if not alive.any():
            continue
        in_a = x_ok[None, :] & ~z_ok  # must join the coalition
        in_b = ~x_ok[None, :] & z_ok  # must stay out
        a_counts = in_a.sum(axis=1)
        b_counts = in_b.sum(axis=1)

        rows = np.nonzero(alive)[0]
        wa = w_in[a_counts[rows], b_counts[rows]] * leaf_value
        wb = w_out[a_counts[rows], b_counts[rows]] * leaf_value
        contrib = in_a[rows] * wa[:, None] - in_b[rows] * wb[:, None]
        values[feats] += contrib.sum(axis=0)
    return values / n_bg


def tree_shap(model: Union[TreeModel, ForestModel], x, bg) -> Attribution:
    """Exact interventional Shapley values via per-leaf traversal.

    Agrees with exact_shapley to float precision at polynomial cost. Forest
    values are the mean of the per-tree values, matching the forest's
    attributed output (mean of per-tree log-odds).
    """
    x = _as_instance(x)
    background = _ensure_background(model, bg)
    _check_instance(model, x)
    if isinstance(model, TreeModel):
        phi = _tree_shap_single(model, x, background.rows)
    elif isinstance(model, ForestModel):
        phi = np.zeros(model.dimension)
        for tree in model.trees:
            phi += _tree_shap_single(tree, x, background.rows)
        phi /= len(model.trees)
    else:
        raise ExplainError("tree_shap requires a tree or forest model")
    return _finish(model, x, background, phi, "tree_interventional")


# ---------------------------------------------------------------------------
# Permutation sampling (any model)
# ---------------------------------------------------------------------------


def sampling_shapley(
    model: Model,
    x,
    bg,
    n_permutations: int = 10_000,
    seed: int = 0,
) -> Attribution:
    """Monte Carlo Shapley estimate: average marginal contributions over
    uniformly random feature orderings.

    Unbiased and fully determined by the seed; the additivity residual is
    recorded on the result, never forced to zero. For logistic models the
    marginal of a feature does not depend on what preceded it, so each
    insertion is a closed-form update; trees and forests re-evaluate
    spliced backgrounds.
    """
    if n_permutations < 1:
        raise ExplainError("n_permutations must be >= 1")
    x = _as_instance(x)
    background = _ensure_background(model, bg)
    _check_instance(model, x)
    active = active_features(model, x, background)
    phi = np.zeros(model.dimension)
    a = active.shape[0]
    if a == 0:
        return _finish(model, x, background, phi, "sampling", n_permutations, seed)

    rng = np.random.default_rng(seed)
    acc = np.zeros(a)
    if isinstance(model, LogisticModel):
        marginals = model.weights[active] * (x[active] - background.feature_means[active])
        for _ in range(n_permutations):
            rng.permutation(a)  # keep the draw stream identical across model kinds
            acc += marginals
    else:
        for _ in range(n_permutations):
            order = rng.permutation(a)
            composite = background.rows.copy()
            v_prev = float(np.mean(model_logodds_batch(model, composite)))
            for j in order:
                composite[:, active[j]] = x[active[j]]
                v_next = float(np.mean(model_logodds_batch(model, composite)))
                acc[j] += v_next - v_prev
                v_prev = v_next
    phi[active] = acc / n_permutations
    return _finish(model, x, background, phi, "sampling", n_permutations, seed)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def explain(
    model: Model,
    x,
    bg,
    method: str = "auto",
    n_permutations: int = 10_000,
    seed: int = 0,
) -> Attribution:
    """Attribute one instance with the requested method.

    "auto" picks the exact closed form for the model family: linear_exact
    for logistic models, tree_interventional for trees and forests.
    """
    if method == "auto":
        method = "linear_exact" if isinstance(model, LogisticModel) else "tree_interventional"
    if method == "linear_exact":
        return linear_shap(model, x, bg)
    if method == "brute_force":
        return exact_shapley(model, x, bg)
    if method == "tree_interventional":
        return tree_shap(model, x, bg)
    if method == "sampling":
        return sampling_shapley(model, x, bg, n_permutations, seed)
    raise ExplainError(f"unknown attribution method {method!r}")


def attribution_to_dict(attribution: Attribution, words: list[str]) -> dict:
    """JSON form: base and output in both spaces, and the full nonzero phi
    vector labeled by word."""
    if len(words) != attribution.phi.shape[0]:
        raise ExplainError(
            f"{len(words)} word labels for {attribution.phi.shape[0]} features"
        )
    phi_entries = [
        {"feature": int(i), "word": words[i], "value": float(attribution.phi[i])}
        for i in np.nonzero(attribution.phi)[0]
    ]
    payload = {
        "base_logodds": attribution.base_logodds,
        "base_probability": attribution.base_probability,
        "output_logodds": attribution.output_logodds,
        "output_probability": attribution.output_probability,
        "phi": phi_entries,
        "method": attribution.method,
        "dimension": int(attribution.phi.shape[0]),
    }
    if attribution.method == "sampling":
        payload["seed"] = attribution.seed
        payload["samples"] = attribution.samples
    return payload


def attribution_from_dict(payload: dict) -> Attribution:
    phi = np.zeros(int(payload["dimension"]))
    for entry in payload["phi"]:
        phi[int(entry["feature"])] = float(entry["value"])
    return Attribution(
        phi=phi,
        base_logodds=float(payload["base_logodds"]),
        output_logodds=float(payload["output_logodds"]),
        base_probability=float(payload["base_probability"]),
        output_probability=float(payload["output_probability"]),
        method=payload["method"],
        samples=payload.get("samples"),
        seed=payload.get("seed"),
    )
