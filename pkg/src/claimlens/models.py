"""From-scratch trainable students: logistic regression (plain and distilled
from teacher probabilities), CART decision trees, and random forests.

All training is full-batch and deterministic for a fixed seed. Probabilities
are clamped to [1e-12, 1 - 1e-12] before every log so saturated teachers
cannot produce infinities. Labels are encoded as y = 1 for true claims and
y = 0 for fake claims; every model predicts p_true.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .corpus import Dataset, TRUE_LABEL
from .textprep import FeatureVector, stack_features

PROB_EPS = 1e-12


class ModelError(ValueError):
    """Raised on training/prediction contract violations."""


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def clamp_probability(p):
    """Clamp probabilities away from 0 and 1 by PROB_EPS."""
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def logit(p):
    """Log-odds ln(p / (1-p)) of a clamped probability."""
    p = clamp_probability(np.asarray(p, dtype=float))
    out = np.log(p) - np.log1p(-p)
    if out.ndim == 0:
        return float(out)
    return out


def soften(p, temperature: float):
    """Temperature-soften a probability by scaling its log-odds.

    temperature == 1 is the identity (no logit round trip, so hard targets
    stay exactly hard)."""
    if temperature == 1.0:
        return p
    if temperature <= 0:
        raise ModelError(f"temperature must be positive, got {temperature}")
    return sigmoid(logit(p) / temperature)


def distill_loss(t, s, temperature: float = 1.0):
    """Two-class soft-target cross-entropy between teacher and student.

    -[t * ln(s) + (1-t) * ln(1-s)] after temperature softening of both
    sides. Non-negative; zero (up to clamping) iff the probabilities match
    exactly at t in {0, 1}.
    """
    t = soften(np.asarray(t, dtype=float), temperature)
    s = clamp_probability(soften(np.asarray(s, dtype=float), temperature))
    out = -(t * np.log(s) + (1.0 - t) * np.log1p(-s))
    if out.ndim == 0:
        return float(out)
    return out


def labels_to_targets(dataset_or_labels: Union[Dataset, Sequence[str]]) -> np.ndarray:
    """Encode labels as a float array with 1.0 for true claims."""
    if isinstance(dataset_or_labels, Dataset):
        labels = [rec.label for rec in dataset_or_labels.records]
    else:
        labels = list(dataset_or_labels)
    return np.array([1.0 if lab == TRUE_LABEL else 0.0 for lab in labels])


@dataclass
class TrainConfig:
    """Hyperparameters for the logistic students.

    distill_weight is the blend alpha: 1.0 trains purely on teacher
    probabilities, 0.0 purely on hard labels. The defaults are tuned for
    L2-normalized TF-IDF features with zero-initialized weights.
    """

    learning_rate: float = 0.5
    epochs: int = 500
    l2_penalty: float = 1e-4
    optimizer: str = "gd"  # "gd" or "adam"
    distill_weight: float = 0.0
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ModelError("learning_rate must be positive")
        if self.epochs < 0:
            raise ModelError("epochs must be >= 0")
        if self.l2_penalty < 0:
            raise ModelError("l2_penalty must be >= 0")
        if self.optimizer not in ("gd", "adam"):
            raise ModelError(f"unknown optimizer {self.optimizer!r}")
        if not 0.0 <= self.distill_weight <= 1.0:
            raise ModelError("distill_weight must be in [0, 1]")
        if self.temperature <= 0:
            raise ModelError("temperature must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LogisticModel:
    """Linear log-odds model: p_true = sigmoid(weights . x + bias)."""

    weights: np.ndarray
    bias: float
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ModelError("logistic parameters must be finite")

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]


@dataclass
class TreeModel:
    """Binary CART over feature thresholds; leaves store p_true.

    Stored as parallel arrays indexed by node id; node 0 is the root. For
    internal nodes feature >= 0 and left/right are child ids; leaves have
    feature == -1 and carry their probability in value.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int
    dimension: int

    def __post_init__(self) -> None:
        self.feature = np.asarray(self.feature, dtype=int)
        self.threshold = np.asarray(self.threshold, dtype=float)
        self.left = np.asarray(self.left, dtype=int)
        self.right = np.asarray(self.right, dtype=int)
        self.value = np.asarray(self.value, dtype=float)
        leaves = self.feature < 0
        leaf_p = self.value[leaves]
        if leaf_p.size and (leaf_p.min() < 0 or leaf_p.max() > 1):
            raise ModelError("leaf probabilities must lie in [0, 1]")

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def leaf_for(self, x: np.ndarray) -> int:
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return int(node)

    def split_features(self) -> np.ndarray:
        return np.unique(self.feature[self.feature >= 0])


@dataclass
class ForestModel:
    """Bagged trees; prediction is the arithmetic mean of tree leaf p_true."""

    trees: list[TreeModel]
    seed: int
    bootstrap: bool
    feature_fraction: float
    dimension: int


Model = Union[LogisticModel, TreeModel, ForestModel]


def _as_dense(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.to_dense()
    return np.asarray(x, dtype=float)


def _check_dimension(model: Model, dim: int) -> None:
    expected = model.dimension
    if expected != dim:
        raise ModelError(f"dimension mismatch: model expects {expected}, got {dim}")


def predict_proba(model: Model, x) -> float:
    """Predicted truth probability for a single instance."""
    dense = _as_dense(x)
    _check_dimension(model, dense.shape[-1])
    return float(predict_proba_batch(model, dense.reshape(1, -1))[0])


def predict_proba_batch(model: Model, X) -> np.ndarray:
    """Vectorized predicted truth probabilities for an (n, V) matrix."""
    if isinstance(X, list):
        X = stack_features(X)
    X = np.asarray(X, dtype=float)
    _check_dimension(model, X.shape[1])
    if isinstance(model, LogisticModel):
        return sigmoid(X @ model.weights + model.bias)
    if isinstance(model, TreeModel):
        return model.value[_tree_leaf_ids(model, X)]
    if isinstance(model, ForestModel):
        acc = np.zeros(X.shape[0])
        for tree in model.trees:
            acc += tree.value[_tree_leaf_ids(tree, X)]
        return acc / len(model.trees)
    raise ModelError(f"unknown model type {type(model).__name__}")


def _tree_leaf_ids(tree: TreeModel, X: np.ndarray) -> np.ndarray:
    """Vectorized root-to-leaf descent; returns the leaf node id per row."""
    nodes = np.zeros(X.shape[0], dtype=int)
    while True:
        feats = tree.feature[nodes]
        internal = feats >= 0
        if not internal.any():
            return nodes
        rows = np.nonzero(internal)[0]
        f = feats[rows]
        go_left = X[rows, f] <= tree.threshold[nodes[rows]]
        nodes[rows] = np.where(go_left, tree.left[nodes[rows]], tree.right[nodes[rows]])


# ---------------------------------------------------------------------------
# Logistic training (shared by plain and distilled paths)
# ---------------------------------------------------------------------------


def logistic_loss_and_grad(
    weights: np.ndarray,
    bias: float,
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    teacher_p: Optional[np.ndarray] = None,
) -> tuple[float, np.ndarray, float]:
    """Objective value and exact gradient at the given parameters.

    Objective: alpha * mean distill_loss + (1 - alpha) * mean hard-label
    cross-entropy + (l2_penalty / 2) * ||weights||^2. The bias is not
    penalized. When alpha == 0 the distillation term is skipped entirely so
    the arithmetic matches plain hard-label training bit for bit.
    """
    alpha = cfg.distill_weight
    tau = cfg.temperature
    z = X @ weights + bias
    s = sigmoid(z)
    n = X.shape[0]

    hard_losses = distill_loss(y, s, 1.0)
    hard_loss = float(np.mean(hard_losses))
    hard_residual = s - y

    if alpha == 0.0 or teacher_p is None:
        if alpha != 0.0 and teacher_p is None:
            raise ModelError("distill_weight > 0 requires teacher targets")
        data_loss = hard_loss
        residual = hard_residual
    else:
        # Soften both sides by scaling log-odds; the student side uses z/tau
        # directly so the loss and its gradient share one formula.
        s_soft = sigmoid(z / tau) if tau != 1.0 else s
        t_soft = soften(np.asarray(teacher_p, dtype=float), tau)
        s_clamped = clamp_probability(s_soft)
        soft_losses = -(t_soft * np.log(s_clamped) + (1.0 - t_soft) * np.log1p(-s_clamped))
        soft_loss = float(np.mean(soft_losses))
        soft_residual = (s_soft - t_soft) / tau
        data_loss = alpha * soft_loss + (1.0 - alpha) * hard_loss
        residual = alpha * soft_residual + (1.0 - alpha) * hard_residual

    grad_w = X.T @ residual / n + cfg.l2_penalty * weights
    grad_b = float(np.mean(residual))
    loss = data_loss + 0.5 * cfg.l2_penalty * float(weights @ weights)
    return loss, grad_w, grad_b


def _fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    teacher_p: Optional[np.ndarray],
) -> LogisticModel:
    n, dim = X.shape
    if n == 0:
        raise ModelError("no training examples")
    if len(np.unique(y)) < 2:
        raise ModelError("degenerate single-class input: need both labels to train")
    if not np.all(np.isfinite(X)):
        raise ModelError("non-finite feature values")

    w = np.zeros(dim)
    b = 0.0
    losses: list[float] = []
    if cfg.optimizer == "adam":
        m_w = np.zeros(dim)
        v_w = np.zeros(dim)
        m_b = 0.0
        v_b = 0.0
        beta1, beta2, eps = 0.9, 0.999, 1e-8

    for epoch in range(cfg.epochs):
        loss, grad_w, grad_b = logistic_loss_and_grad(w, b, X, y, cfg, teacher_p)
        if not math.isfinite(loss):
            raise ModelError(f"training diverged: non-finite loss at iteration {epoch}")
        losses.append(loss)
        if cfg.optimizer == "gd":
            w = w - cfg.learning_rate * grad_w
            b = b - cfg.learning_rate * grad_b
        else:
            step = epoch + 1
            m_w = beta1 * m_w + (1 - beta1) * grad_w
            v_w = beta2 * v_w + (1 - beta2) * grad_w**2
            m_b = beta1 * m_b + (1 - beta1) * grad_b
            v_b = beta2 * v_b + (1 - beta2) * grad_b**2
            mhat_w = m_w / (1 - beta1**step)
            vhat_w = v_w / (1 - beta2**step)
            mhat_b = m_b / (1 - beta1**step)
            vhat_b = v_b / (1 - beta2**step)
            w = w - cfg.learning_rate * mhat_w / (np.sqrt(vhat_w) + eps)
            b = b - cfg.learning_rate * mhat_b / (np.sqrt(vhat_b) + eps)

    final_loss, _, _ = logistic_loss_and_grad(w, b, X, y, cfg, teacher_p)
    if not math.isfinite(final_loss):
        raise ModelError(f"training diverged: non-finite loss at iteration {cfg.epochs}")
    losses.append(final_loss)

    meta = {
        "loss_curve": losses,
        "config": cfg.to_dict(),
        "n_examples": n,
        "distilled": teacher_p is not None and cfg.distill_weight > 0,
    }
    return LogisticModel(weights=w, bias=b, training_meta=meta)


def train_logistic(X, y, cfg: TrainConfig = TrainConfig()) -> LogisticModel:
    """Full-batch hard-label logistic regression with L2 penalty."""
    if isinstance(X, list):
        X = stack_features(X)
    return _fit_logistic(np.asarray(X, dtype=float), np.asarray(y, dtype=float), cfg, None)


def train_distilled(X, y, targets, cfg: TrainConfig, ids: Optional[Sequence[str]] = None) -> LogisticModel:
    """Distill teacher probabilities into a logistic student.

    ``targets`` is either an array of teacher p_true aligned with the rows of
    X, or a TeacherTargets object plus the aligned ``ids``. Blending follows
    cfg.distill_weight; cfg.distill_weight == 0 reproduces train_logistic
    bitwise for the same inputs.
    """
    if isinstance(X, list):
        X = stack_features(X)
    X = np.asarray(X, dtype=float)
    from .teacher import TeacherTargets  # local import to avoid a cycle

    if isinstance(targets, TeacherTargets):
        if ids is None:
            raise ModelError("TeacherTargets input requires the aligned record ids")
        teacher_p = targets.aligned(ids)
    else:
        teacher_p = np.asarray(targets, dtype=float)
    if teacher_p.shape[0] != X.shape[0]:
        raise ModelError(
            f"teacher target count {teacher_p.shape[0]} does not match {X.shape[0]} examples"
        )
    return _fit_logistic(X, np.asarray(y, dtype=float), cfg, teacher_p)


# ---------------------------------------------------------------------------
# CART and random forest
# ---------------------------------------------------------------------------


@dataclass
class TreeConfig:
    max_depth: int = 12
    min_leaf: int = 1

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise ModelError("max_depth must be >= 0")
        if self.min_leaf < 1:
            raise ModelError("min_leaf must be >= 1")


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 1
    feature_fraction: float = 0.5
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ModelError("n_trees must be >= 1")
        if not 0.0 < self.feature_fraction <= 1.0:
            raise ModelError("feature_fraction must be in (0, 1]")


def _gini_pair(pos: np.ndarray, total: np.ndarray) -> np.ndarray:
    """Gini impurity 2p(1-p) from positive counts, safe where total == 0."""
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(total > 0, pos / np.maximum(total, 1), 0.0)
    return 2.0 * p * (1.0 - p)


def _best_split(
    X: np.ndarray, y: np.ndarray, columns: np.ndarray, min_leaf: int
) -> Optional[tuple[int, float]]:
    """Best (feature, threshold) by maximum Gini impurity decrease.

    Thresholds are midpoints between consecutive sorted distinct values.
    Ties break to the lowest feature index, then the lowest threshold.
    Returns None when no candidate split is valid.
    """
    n = X.shape[0]
    sub = X[:, columns]
    order = np.argsort(sub, axis=0, kind="stable")
    sorted_vals = np.take_along_axis(sub, order, axis=0)
    sorted_y = y[order]

    prefix_pos = np.cumsum(sorted_y, axis=0)
    total_pos = prefix_pos[-1]
    left_n = np.arange(1, n)[:, None].astype(float)
    right_n = n - left_n
    left_pos = prefix_pos[:-1]
    right_pos = total_pos[None, :] - left_pos

    gini_left = _gini_pair(left_pos, left_n)
    gini_right = _gini_pair(right_pos, right_n)
    p_parent = total_pos / n
    parent_gini = 2.0 * p_parent * (1.0 - p_parent)
    weighted = (left_n * gini_left + right_n * gini_right) / n
    decrease = parent_gini[None, :] - weighted

    valid = sorted_vals[:-1] < sorted_vals[1:]
    if min_leaf > 1:
        sizes_ok = (left_n >= min_leaf) & (right_n >= min_leaf)
        valid = valid & sizes_ok
    decrease = np.where(valid, decrease, -np.inf)

    # Feature-major flattening makes argmax's first-hit rule implement the
    # lowest-feature-then-lowest-threshold tie break.
    flat = decrease.T.reshape(-1)
    best = int(np.argmax(flat))
    if not np.isfinite(flat[best]) or flat[best] < 0:
        return None
    col_local, split_pos = divmod(best, n - 1)
    feature = int(columns[col_local])
    threshold = float(
        (sorted_vals[split_pos, col_local] + sorted_vals[split_pos + 1, col_local]) / 2.0
    )
    return feature, threshold


class _TreeBuilder:
    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        max_depth: int,
        min_leaf: int,
        feature_fraction: float = 1.0,
        rng: Optional[np.random.Generator] = None,
    ):
        self.X = X
        self.y = y
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_fraction = feature_fraction
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _new_node(self) -> int:
        # 0.0 placeholders (not NaN) keep whole-array comparisons and JSON
        # serialization well-behaved; feature == -1 is the leaf marker
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def _columns(self, n_features: int) -> np.ndarray:
        if self.feature_fraction >= 1.0 or self.rng is None:
            return np.arange(n_features)
        m = max(1, int(round(self.feature_fraction * n_features)))
        cols = self.rng.choice(n_features, size=m, replace=False)
        return np.sort(cols)

    def build(self, indices: np.ndarray, depth: int) -> int:
        node = self._new_node()
        y_node = self.y[indices]
        p_true = float(np.mean(y_node))
        n = indices.shape[0]
        pure = p_true in (0.0, 1.0)
        if depth >= self.max_depth or pure or n < 2 * self.min_leaf:
            self.value[node] = p_true
            return node
        split = _best_split(self.X[indices], y_node, self._columns(self.X.shape[1]), self.min_leaf)
        if split is None:
            self.value[node] = p_true
            return node
        feat, thr = split
        goes_left = self.X[indices, feat] <= thr
        left_idx = indices[goes_left]
        right_idx = indices[~goes_left]
        self.feature[node] = feat
        self.threshold[node] = thr
        self.left[node] = self.build(left_idx, depth + 1)
        self.right[node] = self.build(right_idx, depth + 1)
        return node


def train_tree(X, y, cfg: TreeConfig = TreeConfig()) -> TreeModel:
    """Grow a CART classification tree; leaves store the class fraction."""
    if isinstance(X, list):
        X = stack_features(X)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise ModelError("no training examples")
    if not np.all(np.isfinite(X)):
        raise ModelError("non-finite feature values")
    builder = _TreeBuilder(X, y, cfg.max_depth, cfg.min_leaf)
    builder.build(np.arange(X.shape[0]), 0)
    return TreeModel(
        feature=np.array(builder.feature),
        threshold=np.array(builder.threshold),
        left=np.array(builder.left),
        right=np.array(builder.right),
        value=np.array(builder.value),
        max_depth=cfg.max_depth,
        dimension=X.shape[1],
    )


def train_forest(X, y, cfg: ForestConfig = ForestConfig()) -> ForestModel:
    """Bagged CART trees with per-split feature subsampling.

    Fully determined by cfg.seed: per-tree RNGs are spawned from one seed
    sequence, so the forest is reproducible regardless of scheduling.
    """
    if isinstance(X, list):
        X = stack_features(X)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise ModelError("no training examples")
    n = X.shape[0]
    seed_seq = np.random.SeedSequence(cfg.seed)
    trees: list[TreeModel] = []
    for child in seed_seq.spawn(cfg.n_trees):
        rng = np.random.default_rng(child)
        if cfg.bootstrap:
            sample = rng.integers(0, n, size=n)
        else:
            sample = np.arange(n)
        builder = _TreeBuilder(
            X[sample], y[sample], cfg.max_depth, cfg.min_leaf, cfg.feature_fraction, rng
        )
        builder.build(np.arange(n), 0)
        trees.append(
            TreeModel(
                feature=np.array(builder.feature),
                threshold=np.array(builder.threshold),
                left=np.array(builder.left),
                right=np.array(builder.right),
                value=np.array(builder.value),
                max_depth=cfg.max_depth,
                dimension=X.shape[1],
            )
        )
    return ForestModel(
        trees=trees,
        seed=cfg.seed,
        bootstrap=cfg.bootstrap,
        feature_fraction=cfg.feature_fraction,
        dimension=X.shape[1],
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _tree_to_nodes(tree: TreeModel) -> list[dict]:
    nodes = []
    for i in range(tree.n_nodes):
        if tree.feature[i] >= 0:
            nodes.append(
                {
                    "feature": int(tree.feature[i]),
                    "threshold": float(tree.threshold[i]),
                    "left": int(tree.left[i]),
                    "right": int(tree.right[i]),
                }
            )
        else:
            nodes.append({"p_true": float(tree.value[i])})
    return nodes


def _tree_from_nodes(nodes: list[dict], max_depth: int, dimension: int) -> TreeModel:
    n = len(nodes)
    feature = np.full(n, -1)
    threshold = np.zeros(n)
    left = np.full(n, -1)
    right = np.full(n, -1)
    value = np.zeros(n)
    for i, node in enumerate(nodes):
        if "feature" in node:
            feature[i] = node["feature"]
            threshold[i] = node["threshold"]
            left[i] = node["left"]
            right[i] = node["right"]
        else:
            value[i] = node["p_true"]
    return TreeModel(feature, threshold, left, right, value, max_depth, dimension)


def model_to_dict(model: Model) -> dict:
    if isinstance(model, LogisticModel):
        return {
            "kind": "logistic",
            "weights": [float(w) for w in model.weights],
            "bias": float(model.bias),
            "training_meta": model.training_meta,
        }
    if isinstance(model, TreeModel):
        return {
            "kind": "tree",
            "nodes": _tree_to_nodes(model),
            "max_depth": int(model.max_depth),
            "dimension": int(model.dimension),
        }
    if isinstance(model, ForestModel):
        return {
            "kind": "forest",
            "trees": [model_to_dict(t) for t in model.trees],
            "seed": int(model.seed),
            "bootstrap": bool(model.bootstrap),
            "feature_fraction": float(model.feature_fraction),
            "dimension": int(model.dimension),
        }
    raise ModelError(f"unknown model type {type(model).__name__}")


def model_from_dict(payload: dict) -> Model:
    kind = payload.get("kind")
    if kind == "logistic":
        return LogisticModel(
            weights=np.array(payload["weights"], dtype=float),
            bias=float(payload["bias"]),
            training_meta=payload.get("training_meta", {}),
        )
    if kind == "tree":
        return _tree_from_nodes(payload["nodes"], payload["max_depth"], payload["dimension"])
    if kind == "forest":
        trees = [model_from_dict(t) for t in payload["trees"]]
        return ForestModel(
            trees=trees,
            seed=int(payload["seed"]),
            bootstrap=bool(payload["bootstrap"]),
            feature_fraction=float(payload["feature_fraction"]),
            dimension=int(payload["dimension"]),
        )
    raise ModelError(f"unknown model kind {kind!r}")


def save_model(model: Model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path) -> Model:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# External dense features (alternative to TF-IDF)
# ---------------------------------------------------------------------------


def load_embedding_features(path: str | Path) -> dict[str, np.ndarray]:
    """Load per-claim dense feature vectors from JSONL of {"id", "vector"}.

    All vectors must share one dimension and contain only finite numbers;
    duplicate ids are an error. Word-level attribution is meaningless on
    these features, so they are for training/evaluation paths only.
    """
    path = Path(path)
    if not path.exists():
        raise ModelError(f"embedding feature file not found: {path}")
    features: dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "id" not in obj or "vector" not in obj:
                raise ModelError(f"{path}:{lineno}: expected keys 'id' and 'vector'")
            record_id = obj["id"]
            if not isinstance(record_id, str) or not record_id:
                raise ModelError(f"{path}:{lineno}: 'id' must be a non-empty string")
            if record_id in features:
                raise ModelError(f"{path}:{lineno}: duplicate id {record_id!r}")
            vec = np.asarray(obj["vector"], dtype=float)
            if vec.ndim != 1 or vec.shape[0] == 0:
                raise ModelError(f"{path}:{lineno}: 'vector' must be a non-empty list")
            if not np.all(np.isfinite(vec)):
                raise ModelError(f"{path}:{lineno}: non-finite value in vector")
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise ModelError(
                    f"{path}:{lineno}: vector length {vec.shape[0]} differs from {dim}"
                )
            features[record_id] = vec
    if not features:
        raise ModelError(f"{path}: no feature rows found")
    return features


def embedding_matrix(features: dict[str, np.ndarray], ids: Sequence[str]) -> np.ndarray:
    """Stack per-id vectors into a matrix aligned with the given ids."""
    missing = [i for i in ids if i not in features]
    if missing:
        shown = ", ".join(repr(i) for i in missing[:10])
        suffix = "" if len(missing) <= 10 else f" (and {len(missing) - 10} more)"
        raise ModelError(
            f"embedding features missing for {len(missing)} record(s): {shown}{suffix}"
        )
    return np.stack([features[i] for i in ids])
