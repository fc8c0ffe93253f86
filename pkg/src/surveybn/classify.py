"""From-scratch classifiers over categorical survey rows, plus evaluation.

All three models (Gini random forest, one-hot logistic regression, first-order
gradient boosting) split on single states of categorical columns and are
deterministic functions of (data, params, seed). Evaluation reports the six
headline metrics with percentile-bootstrap confidence intervals and the full
ROC / precision-recall point sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataset import MISSING, DatasetTable, impute_modes
from .errors import (
    EmptyData,
    MissingColumn,
    NonBinaryLabel,
    SchemaMismatch,
    SingleClassLabels,
    SingleClassTrain,
)
from .rng import derive_rng

MODEL_FORMAT_VERSION = 1
_MIN_GAIN = 1e-12

FeatureSchema = tuple[tuple[str, tuple[str, ...]], ...]


@dataclass(frozen=True)
class TreeNode:
    """Binary split on one state of one column, or a leaf payload.

    Classification leaves hold a class-probability pair; regression leaves a
    single value. Rows matching (column == state) go left.
    """

    column: int = -1
    state: int = -1
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    leaf: tuple[float, ...] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.leaf is not None


def _tree_to_json(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"leaf": [float(v) for v in node.leaf]}
    return {
        "column": node.column,
        "state": node.state,
        "left": _tree_to_json(node.left),
        "right": _tree_to_json(node.right),
    }


def _tree_from_json(doc: Mapping) -> TreeNode:
    if "leaf" in doc:
        return TreeNode(leaf=tuple(float(v) for v in doc["leaf"]))
    return TreeNode(
        column=int(doc["column"]),
        state=int(doc["state"]),
        left=_tree_from_json(doc["left"]),
        right=_tree_from_json(doc["right"]),
    )


def _tree_apply(node: TreeNode, x: np.ndarray, rows: np.ndarray, out: np.ndarray, slot: int) -> None:
    if node.is_leaf:
        out[rows] = node.leaf[slot]
        return
    mask = x[rows, node.column] == node.state
    _tree_apply(node.left, x, rows[mask], out, slot)
    _tree_apply(node.right, x, rows[~mask], out, slot)


# -- training-side plumbing -------------------------------------------------------


def _prepare_training(train: DatasetTable, label: str) -> tuple[np.ndarray, np.ndarray, FeatureSchema, tuple[str, ...]]:
    li = train.column_index(label)
    if train.columns[li].cardinality != 2:
        raise NonBinaryLabel(
            f"label {label!r} has {train.columns[li].cardinality} states, need 2"
        )
    keep = np.flatnonzero(train.codes[:, li] != MISSING)
    if keep.size == 0:
        raise EmptyData("no rows with an observed label")
    filled = impute_modes(train.select_rows(keep.tolist()))
    y = filled.codes[:, li].astype(np.int64)
    if y.min() == y.max():
        raise SingleClassTrain(
            f"label {label!r} takes a single value in the training rows"
        )
    features = tuple(
        (c.name, c.states) for j, c in enumerate(train.columns) if j != li
    )
    cols = [j for j in range(train.n_cols) if j != li]
    x = filled.codes[:, cols].astype(np.int64)
    return x, y, features, train.columns[li].states


def _feature_matrix(table: DatasetTable, features: FeatureSchema) -> np.ndarray:
    filled = impute_modes(table)
    x = np.zeros((table.n_rows, len(features)), dtype=np.int64)
    for k, (name, states) in enumerate(features):
        try:
            j = table.column_index(name)
        except MissingColumn as exc:
            raise SchemaMismatch(f"prediction rows lack column {name!r}") from exc
        if table.columns[j].states != tuple(states):
            raise SchemaMismatch(
                f"column {name!r} states {list(table.columns[j].states)} != "
                f"training states {list(states)}"
            )
        x[:, k] = filled.codes[:, j]
    return x


# -- random forest ----------------------------------------------------------------


@dataclass(frozen=True)
class ForestModel:
    features: FeatureSchema
    label: str
    label_states: tuple[str, ...]
    trees: tuple[TreeNode, ...]
    feature_importance: tuple[float, ...]
    n_trees: int
    max_depth: int
    min_leaf: int
    feature_fraction: float
    seed: int

    def __post_init__(self) -> None:
        if not self.trees:
            raise ValueError("a forest needs at least one tree")


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _best_gini_split(
    x: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    columns: Sequence[int],
    cards: Sequence[int],
    min_leaf: int,
) -> tuple[float, int, int] | None:
    parent_counts = np.bincount(y[rows], minlength=2)
    parent_gini = _gini(parent_counts)
    n = rows.size
    best: tuple[float, int, int] | None = None
    for col in columns:
        codes = x[rows, col]
        for state in range(cards[col]):
            mask = codes == state
            n_left = int(mask.sum())
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            left_counts = np.bincount(y[rows[mask]], minlength=2)
            right_counts = parent_counts - left_counts
            gain = parent_gini - (
                n_left / n * _gini(left_counts)
                + (n - n_left) / n * _gini(right_counts)
            )
            if gain > _MIN_GAIN and (best is None or gain > best[0]):
                best = (gain, col, state)
    return best


def _grow_classification(
    x: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    depth: int,
    max_depth: int,
    min_leaf: int,
    n_subset: int,
    cards: Sequence[int],
    rng: np.random.Generator,
    importance: np.ndarray,
    n_total: int,
) -> TreeNode:
    counts = np.bincount(y[rows], minlength=2)
    if depth >= max_depth or counts.min() == 0 or rows.size < 2 * min_leaf:
        total = counts.sum()
        return TreeNode(leaf=(counts[0] / total, counts[1] / total))
    subset = sorted(rng.choice(x.shape[1], size=n_subset, replace=False).tolist())
    found = _best_gini_split(x, y, rows, subset, cards, min_leaf)
    if found is None:
        total = counts.sum()
        return TreeNode(leaf=(counts[0] / total, counts[1] / total))
    gain, col, state = found
    importance[col] += gain * rows.size / n_total
    mask = x[rows, col] == state
    left = _grow_classification(
        x, y, rows[mask], depth + 1, max_depth, min_leaf, n_subset, cards, rng,
        importance, n_total,
    )
    right = _grow_classification(
        x, y, rows[~mask], depth + 1, max_depth, min_leaf, n_subset, cards, rng,
        importance, n_total,
    )
    return TreeNode(column=col, state=state, left=left, right=right)


def fit_forest(
    train: DatasetTable,
    label: str,
    n_trees: int = 100,
    max_depth: int = 10,
    min_leaf: int = 1,
    feature_fraction: float = 0.7,
    seed: int = 0,
) -> ForestModel:
    """Bagged Gini trees with per-split feature subsampling.

    Tree t's bootstrap rows and feature subsets come only from derive_rng(seed, t),
    so refits (and parallel fits) reproduce the forest exactly.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if not (0.0 < feature_fraction <= 1.0):
        raise ValueError("feature_fraction must be in (0, 1]")
    x, y, features, label_states = _prepare_training(train, label)
    cards = [len(states) for _, states in features]
    n, f = x.shape
    n_subset = max(1, round(feature_fraction * f))
    importance = np.zeros(f)
    trees = []
    for t in range(n_trees):
        rng = derive_rng(seed, t)
        rows = rng.integers(0, n, size=n)
        trees.append(
            _grow_classification(
                x, y, rows, 0, max_depth, min_leaf, n_subset, cards, rng,
                importance, n,
            )
        )
    importance /= n_trees
    if importance.sum() > 0:
        importance = importance / importance.sum()
    return ForestModel(
        features,
        label,
        label_states,
        tuple(trees),
        tuple(float(v) for v in importance),
        n_trees,
        max_depth,
        min_leaf,
        feature_fraction,
        seed,
    )


# -- logistic regression ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LogisticModel:
    features: FeatureSchema
    label: str
    label_states: tuple[str, ...]
    weights: np.ndarray
    intercept: float
    learn_rate: float
    epochs: int
    l2: float

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        expected = sum(len(states) - 1 for _, states in self.features)
        if w.shape != (expected,):
            raise ValueError(f"weight vector shape {w.shape} != ({expected},)")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def one_hot(x: np.ndarray, cards: Sequence[int]) -> np.ndarray:
    """Reference-state encoding: state 0 of each column maps to all-zeros."""
    blocks = []
    for j, card in enumerate(cards):
        block = np.zeros((x.shape[0], card - 1))
        for s in range(1, card):
            block[:, s - 1] = x[:, j] == s
        blocks.append(block)
    return np.hstack(blocks) if blocks else np.zeros((x.shape[0], 0))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(x: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float) -> float:
    """Mean cross-entropy plus (l2/2)*||w||^2; the intercept is unpenalized."""
    z = x @ w + b
    # log(1 + exp(z)) - y*z, computed stably via logaddexp.
    per_row = np.logaddexp(0.0, z) - y * z
    return float(per_row.mean() + 0.5 * l2 * np.dot(w, w))


def logistic_gradient(
    x: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float
) -> tuple[np.ndarray, float]:
    p = _sigmoid(x @ w + b)
    err = p - y
    return x.T @ err / len(y) + l2 * w, float(err.mean())


def fit_logistic(
    train: DatasetTable,
    label: str,
    learn_rate: float = 0.5,
    epochs: int = 500,
    l2: float = 0.0,
) -> LogisticModel:
    """Full-batch gradient descent from zero weights."""
    if learn_rate <= 0 or epochs < 1 or l2 < 0:
        raise ValueError("need learn_rate > 0, epochs >= 1, l2 >= 0")
    xi, y, features, label_states = _prepare_training(train, label)
    cards = [len(states) for _, states in features]
    x = one_hot(xi, cards)
    w = np.zeros(x.shape[1])
    b = 0.0
    yf = y.astype(float)
    for _ in range(epochs):
        grad_w, grad_b = logistic_gradient(x, yf, w, b, l2)
        w = w - learn_rate * grad_w
        b = b - learn_rate * grad_b
    return LogisticModel(
        features, label, label_states, w, float(b), learn_rate, epochs, l2
    )


# -- gradient boosting ------------------------------------------------------------


@dataclass(frozen=True)
class BoostedModel:
    features: FeatureSchema
    label: str
    label_states: tuple[str, ...]
    initial_log_odds: float
    eta: float
    trees: tuple[TreeNode, ...]
    stages: int
    max_depth: int
    min_leaf: int


def _best_sse_split(
    x: np.ndarray,
    r: np.ndarray,
    rows: np.ndarray,
    cards: Sequence[int],
    min_leaf: int,
) -> tuple[float, int, int] | None:
    n = rows.size
    total = r[rows].sum()
    base = total * total / n
    best: tuple[float, int, int] | None = None
    for col in range(x.shape[1]):
        codes = x[rows, col]
        for state in range(cards[col]):
            mask = codes == state
            n_left = int(mask.sum())
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            left_sum = r[rows[mask]].sum()
            right_sum = total - left_sum
            gain = (
                left_sum * left_sum / n_left
                + right_sum * right_sum / (n - n_left)
                - base
            )
            if gain > _MIN_GAIN and (best is None or gain > best[0]):
                best = (gain, col, state)
    return best


def _grow_regression(
    x: np.ndarray,
    r: np.ndarray,
    rows: np.ndarray,
    depth: int,
    max_depth: int,
    min_leaf: int,
    cards: Sequence[int],
) -> TreeNode:
    if depth >= max_depth or rows.size < 2 * min_leaf:
        return TreeNode(leaf=(float(r[rows].mean()),))
    found = _best_sse_split(x, r, rows, cards, min_leaf)
    if found is None:
        return TreeNode(leaf=(float(r[rows].mean()),))
    _, col, state = found
    mask = x[rows, col] == state
    return TreeNode(
        column=col,
        state=state,
        left=_grow_regression(x, r, rows[mask], depth + 1, max_depth, min_leaf, cards),
        right=_grow_regression(x, r, rows[~mask], depth + 1, max_depth, min_leaf, cards),
    )


def fit_boosted(
    train: DatasetTable,
    label: str,
    stages: int = 100,
    max_depth: int = 3,
    eta: float = 0.1,
    min_leaf: int = 1,
) -> BoostedModel:
    """Stagewise regression trees on the logistic-loss residual y - p."""
    if stages < 0 or eta < 0:
        raise ValueError("need stages >= 0 and eta >= 0")
    x, y, features, label_states = _prepare_training(train, label)
    cards = [len(states) for _, states in features]
    yf = y.astype(float)
    p1 = yf.mean()
    f0 = float(np.log(p1 / (1.0 - p1)))
    scores = np.full(len(yf), f0)
    all_rows = np.arange(len(yf))
    trees = []
    for _ in range(stages):
        residual = yf - _sigmoid(scores)
        tree = _grow_regression(x, residual, all_rows, 0, max_depth, min_leaf, cards)
        if eta > 0:
            step = np.zeros(len(yf))
            _tree_apply(tree, x, all_rows, step, 0)
            scores = scores + eta * step
        trees.append(tree)
    return BoostedModel(
        features, label, label_states, f0, eta, tuple(trees), stages, max_depth, min_leaf
    )


# -- prediction & serialization ---------------------------------------------------


def predict_proba(
    model: ForestModel | LogisticModel | BoostedModel, rows: DatasetTable
) -> np.ndarray:
    """P(label = second state) per row; features must match the training schema."""
    x = _feature_matrix(rows, model.features)
    n = x.shape[0]
    idx = np.arange(n)
    if isinstance(model, ForestModel):
        acc = np.zeros(n)
        buf = np.zeros(n)
        for tree in model.trees:
            _tree_apply(tree, x, idx, buf, 1)
            acc += buf
        return acc / len(model.trees)
    if isinstance(model, LogisticModel):
        cards = [len(states) for _, states in model.features]
        return _sigmoid(one_hot(x, cards) @ model.weights + model.intercept)
    if isinstance(model, BoostedModel):
        scores = np.full(n, model.initial_log_odds)
        buf = np.zeros(n)
        for tree in model.trees:
            _tree_apply(tree, x, idx, buf, 0)
            scores = scores + model.eta * buf
        return _sigmoid(scores)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def model_to_json(model: ForestModel | LogisticModel | BoostedModel) -> dict:
    base = {
        "format_version": MODEL_FORMAT_VERSION,
        "label": model.label,
        "label_states": list(model.label_states),
        "features": [
            {"name": name, "states": list(states)} for name, states in model.features
        ],
    }
    if isinstance(model, ForestModel):
        base.update(
            kind="forest",
            trees=[_tree_to_json(t) for t in model.trees],
            feature_importance=list(model.feature_importance),
            params={
                "n_trees": model.n_trees,
                "max_depth": model.max_depth,
                "min_leaf": model.min_leaf,
                "feature_fraction": model.feature_fraction,
                "seed": model.seed,
            },
        )
    elif isinstance(model, LogisticModel):
        base.update(
            kind="logistic",
            weights=[float(v) for v in model.weights],
            intercept=model.intercept,
            params={
                "learn_rate": model.learn_rate,
                "epochs": model.epochs,
                "l2": model.l2,
            },
        )
    elif isinstance(model, BoostedModel):
        base.update(
            kind="boosted",
            trees=[_tree_to_json(t) for t in model.trees],
            initial_log_odds=model.initial_log_odds,
            params={
                "stages": model.stages,
                "max_depth": model.max_depth,
                "eta": model.eta,
                "min_leaf": model.min_leaf,
            },
        )
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return base


def model_from_json(doc: Mapping) -> ForestModel | LogisticModel | BoostedModel:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {doc.get('format_version')!r}")
    features = tuple((f["name"], tuple(f["states"])) for f in doc["features"])
    label = doc["label"]
    label_states = tuple(doc["label_states"])
    kind = doc.get("kind")
    params = doc["params"]
    if kind == "forest":
        return ForestModel(
            features,
            label,
            label_states,
            tuple(_tree_from_json(t) for t in doc["trees"]),
            tuple(float(v) for v in doc["feature_importance"]),
            int(params["n_trees"]),
            int(params["max_depth"]),
            int(params["min_leaf"]),
            float(params["feature_fraction"]),
            int(params["seed"]),
        )
    if kind == "logistic":
        return LogisticModel(
            features,
            label,
            label_states,
            np.array(doc["weights"], dtype=float),
            float(doc["intercept"]),
            float(params["learn_rate"]),
            int(params["epochs"]),
            float(params["l2"]),
        )
    if kind == "boosted":
        return BoostedModel(
            features,
            label,
            label_states,
            float(doc["initial_log_odds"]),
            float(params["eta"]),
            tuple(_tree_from_json(t) for t in doc["trees"]),
            int(params["stages"]),
            int(params["max_depth"]),
            int(params["min_leaf"]),
        )
    raise ValueError(f"unknown model kind {kind!r}")


# -- metrics ----------------------------------------------------------------------


@dataclass(frozen=True)
class MetricEstimate:
    point: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class MetricsReport:
    accuracy: MetricEstimate
    f1: MetricEstimate
    sensitivity: MetricEstimate
    specificity: MetricEstimate
    au_roc: MetricEstimate
    au_prc: MetricEstimate
    threshold: float
    n: int
    roc_points: tuple[tuple[float, float], ...]
    pr_points: tuple[tuple[float, float], ...]

    def to_json(self) -> dict:
        def enc(m: MetricEstimate) -> dict:
            return {"point": m.point, "ci": [m.ci_low, m.ci_high]}

        return {
            "format_version": 1,
            "n": self.n,
            "threshold": self.threshold,
            "metrics": {
                "accuracy": enc(self.accuracy),
                "f1": enc(self.f1),
                "sensitivity": enc(self.sensitivity),
                "specificity": enc(self.specificity),
                "au_roc": enc(self.au_roc),
                "au_prc": enc(self.au_prc),
            },
            "roc_points": [[fpr, tpr] for fpr, tpr in self.roc_points],
            "pr_points": [[r, p] for r, p in self.pr_points],
        }


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their group's average rank."""
    order = np.argsort(values, kind="mergesort")
    ranked = values[order]
    starts = np.flatnonzero(np.r_[True, ranked[1:] != ranked[:-1]])
    ends = np.r_[starts[1:], len(ranked)]
    avg = (starts + ends - 1) / 2.0 + 1.0
    ranks = np.empty(len(values))
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under ROC via the rank statistic.

    Equals the trapezoid area of the full ranked sweep with tied scores
    averaged, and matches pairwise concordance counting bit for bit: both
    reduce to the same half-integer numerator over P*N.
    """
    pos = labels == 1
    p = int(pos.sum())
    n = len(labels) - p
    ranks = average_ranks(scores)
    return float((ranks[pos].sum() - p * (p + 1) / 2.0) / (p * n))


def _ranked_sweep(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative (tp, fp) at each distinct score, descending."""
    order = np.argsort(-scores, kind="mergesort")
    y = labels[order]
    s = scores[order]
    boundary = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(y == 1)[boundary]
    fp = np.cumsum(y == 0)[boundary]
    return tp.astype(float), fp.astype(float)


def auprc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under precision-recall using the step-wise precision envelope."""
    tp, fp = _ranked_sweep(scores, labels)
    p = tp[-1]
    recall = tp / p
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    return float(np.sum(np.diff(np.r_[0.0, recall]) * envelope))


def _confusion(scores: np.ndarray, labels: np.ndarray, threshold: float) -> tuple[float, float, float, float]:
    pred = scores >= threshold
    pos = labels == 1
    tp = float(np.sum(pred & pos))
    fp = float(np.sum(pred & ~pos))
    fn = float(np.sum(~pred & pos))
    tn = float(np.sum(~pred & ~pos))
    n = tp + fp + fn + tn
    accuracy = (tp + tn) / n
    sensitivity = tp / (tp + fn) if tp + fn > 0 else 0.0
    specificity = tn / (tn + fp) if tn + fp > 0 else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn > 0 else 0.0
    return accuracy, f1, sensitivity, specificity


def _all_metrics(scores: np.ndarray, labels: np.ndarray, threshold: float) -> tuple[float, ...]:
    return _confusion(scores, labels, threshold) + (
        auroc(scores, labels),
        auprc(scores, labels),
    )


def evaluate(
    scores: Sequence[float] | np.ndarray,
    labels: Sequence[int] | np.ndarray,
    threshold: float = 0.5,
    bootstrap: int = 1000,
    seed: int = 0,
) -> MetricsReport:
    """Six headline metrics with seeded percentile-bootstrap 95% intervals.

    Bootstrap resamples that lose one of the classes are skipped; intervals
    are widened, if needed, to include the point estimate.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    if len(np.unique(labels)) < 2:
        raise SingleClassLabels("both classes must appear in the labels")
    points = _all_metrics(scores, labels, threshold)
    rng = derive_rng(seed)
    n = len(scores)
    samples: list[tuple[float, ...]] = []
    for _ in range(bootstrap):
        idx = rng.integers(0, n, size=n)
        yb = labels[idx]
        if yb.min() == yb.max():
            continue
        samples.append(_all_metrics(scores[idx], yb, threshold))
    estimates = []
    if samples:
        arr = np.array(samples)
        for k, point in enumerate(points):
            lo, hi = np.percentile(arr[:, k], [2.5, 97.5])
            estimates.append(MetricEstimate(point, min(float(lo), point), max(float(hi), point)))
    else:
        estimates = [MetricEstimate(p, p, p) for p in points]

    tp, fp = _ranked_sweep(scores, labels)
    p_total, n_total = tp[-1], fp[-1]
    roc = tuple(
        (float(f / n_total), float(t / p_total)) for f, t in zip(np.r_[0.0, fp], np.r_[0.0, tp])
    )
    pr = tuple(
        (float(t / p_total), float(t / (t + f))) for t, f in zip(tp, fp)
    )
    return MetricsReport(
        estimates[0], estimates[1], estimates[2], estimates[3], estimates[4], estimates[5],
        float(threshold), n, roc, pr,
    )
