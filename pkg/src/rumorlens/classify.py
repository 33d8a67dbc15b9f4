"""AdaBoost.M1 over weighted-Gini decision trees, skew-capping resampling and CV evaluation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.metrics import precision_recall_fscore_support
from sklearn.model_selection import StratifiedKFold

from rumorlens.trends import FEATURE_SETS, FeatureVector

ERR_FLOOR = 1e-10
MAX_RATIO = 2


class ClassifyError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleConfig:
    rounds: int = 40
    min_leaf: int = 2
    min_parent: int = 3
    seed: int = 0


# --- weak learner -----------------------------------------------------------


@dataclass
class DecisionTree:
    """Binary tree over {-1, +1} labels stored as flat node arrays."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[int] = field(default_factory=list)

    def _add(self, feature=-1, threshold=0.0, value=0) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.feature) - 1

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X), dtype=int)
        stack = [(0, np.arange(len(X)))]
        while stack:
            node, idx = stack.pop()
            if self.feature[node] < 0 or len(idx) == 0:
                out[idx] = self.value[node]
                continue
            go_left = X[idx, self.feature[node]] <= self.threshold[node]
            stack.append((self.left[node], idx[go_left]))
            stack.append((self.right[node], idx[~go_left]))
        return out


def _best_split(X, y, w, min_leaf):
    """Lowest weighted-Gini split of the node as (feature, threshold, impurity) or None."""
    m, d = X.shape
    order = np.argsort(X, axis=0, kind="stable")
    V = np.take_along_axis(X, order, axis=0)
    wpos = np.where(y > 0, w, 0.0)[order]
    wneg = np.where(y > 0, 0.0, w)[order]
    Lp = np.cumsum(wpos, axis=0)[:-1]
    Ln = np.cumsum(wneg, axis=0)[:-1]
    Tp, Tn = wpos.sum(axis=0), wneg.sum(axis=0)
    Rp, Rn = Tp - Lp, Tn - Ln
    WL, WR = Lp + Ln, Rp + Rn
    with np.errstate(invalid="ignore", divide="ignore"):
        # W_child * gini(child) = W_child - (p^2 + n^2) / W_child
        cost = (WL - (Lp**2 + Ln**2) / WL) + (WR - (Rp**2 + Rn**2) / WR)
    k = np.arange(1, m)[:, None]
    valid = (k >= min_leaf) & (m - k >= min_leaf) & (V[:-1] < V[1:]) & (WL > 0) & (WR > 0)
    if not valid.any():
        return None
    cost = np.where(valid, cost, np.inf)
    flat = int(np.argmin(cost))
    pos, feat = divmod(flat, d)
    threshold = 0.5 * (V[pos, feat] + V[pos + 1, feat])
    # guard against midpoint rounding onto the upper value
    if not V[pos, feat] <= threshold < V[pos + 1, feat]:
        threshold = V[pos, feat]
    return feat, float(threshold), float(cost[pos, feat])


def fit_tree(X, y, w, min_leaf: int = 2, min_parent: int = 3, fallback: int = 1) -> DecisionTree:
    """Grow a weighted-Gini tree on labels in {-1, +1}.

    A node is split only if it holds at least ``min_parent`` items, each child
    receives at least ``min_leaf`` items and the weighted impurity decreases.
    Leaves predict the weighted majority label, ``fallback`` on exact ties.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    w = np.asarray(w, dtype=float)
    tree = DecisionTree()

    def leaf_value(idx):
        pos = w[idx][y[idx] > 0].sum()
        neg = w[idx][y[idx] < 0].sum()
        if pos > neg:
            return 1
        if neg > pos:
            return -1
        return fallback

    root = tree._add(value=leaf_value(np.arange(len(y))))
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, idx = stack.pop()
        wi, yi = w[idx], y[idx]
        W = wi.sum()
        pos = wi[yi > 0].sum()
        parent_cost = W - (pos**2 + (W - pos) ** 2) / W if W > 0 else 0.0
        if len(idx) < min_parent or parent_cost <= 1e-12 * max(W, 1e-300):
            continue
        split = _best_split(X[idx], yi, wi, min_leaf)
        if split is None or split[2] >= parent_cost - 1e-12 * W:
            continue
        feat, thr, _ = split
        go_left = X[idx, feat] <= thr
        li, ri = idx[go_left], idx[~go_left]
        tree.feature[node] = feat
        tree.threshold[node] = thr
        tree.left[node] = tree._add(value=leaf_value(li))
        tree.right[node] = tree._add(value=leaf_value(ri))
        stack.append((tree.right[node], ri))
        stack.append((tree.left[node], li))
    return tree


# --- ensemble ---------------------------------------------------------------


@dataclass
class Ensemble:
    learners: list[DecisionTree]
    learner_weights: list[float]
    config: EnsembleConfig
    classes: tuple
    majority: object
    n_features: int
    train_errors: list[float] = field(default_factory=list)

    def _as_matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ClassifyError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def decision_function(self, X) -> np.ndarray:
        X = self._as_matrix(X)
        score = np.zeros(len(X))
        for tree, alpha in zip(self.learners, self.learner_weights):
            score += alpha * tree.predict(X)
        return score

    def staged_decision_function(self, X):
        X = self._as_matrix(X)
        score = np.zeros(len(X))
        for tree, alpha in zip(self.learners, self.learner_weights):
            score = score + alpha * tree.predict(X)
            yield score

    def labels_from_scores(self, score) -> np.ndarray:
        neg, pos = self.classes
        out = np.empty(len(score), dtype=object)
        out[score > 0] = pos
        out[score < 0] = neg
        out[score == 0] = self.majority
        return np.array(out.tolist())

    def predict(self, X) -> np.ndarray:
        return self.labels_from_scores(self.decision_function(X))


def _binary(y):
    y = np.asarray(y)
    classes = np.unique(y)
    if len(classes) != 2:
        raise ClassifyError(f"need exactly two classes, got {len(classes)}")
    signs = np.where(y == classes[1], 1, -1)
    counts = (int(np.sum(signs < 0)), int(np.sum(signs > 0)))
    majority = classes[1] if counts[1] > counts[0] else classes[0]
    return classes, signs, majority


def train_adaboost(X, y, config: EnsembleConfig = EnsembleConfig()) -> Ensemble:
    """AdaBoost.M1 with discrete trees.

    Stops early when a round's weighted error reaches 0.5 (the round is
    discarded) or 0 (kept with the error floored at ``ERR_FLOOR``).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ClassifyError("X must be (n, d) aligned with y")
    if X.shape[0] < 4:
        raise ClassifyError("need at least 4 training items")
    classes, ys, majority = _binary(y)
    fallback = 1 if majority == classes[1] else -1
    n = len(ys)
    w = np.full(n, 1.0 / n)
    ens = Ensemble([], [], config, (classes[0], classes[1]), majority, X.shape[1])
    for _ in range(config.rounds):
        tree = fit_tree(X, ys, w, config.min_leaf, config.min_parent, fallback)
        h = tree.predict(X)
        err = float(w[h != ys].sum())
        if err >= 0.5:
            break
        done = err <= 0.0
        err_used = ERR_FLOOR if done else err
        alpha = 0.5 * math.log((1 - err_used) / err_used)
        ens.learners.append(tree)
        ens.learner_weights.append(alpha)
        ens.train_errors.append(err)
        if done:
            break
        w = w * np.exp(-alpha * ys * h)
        w /= w.sum()
    return ens


def predict(ensemble: Ensemble, x) -> object:
    """Label for a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ClassifyError("predict expects one vector; use Ensemble.predict for batches")
    return ensemble.predict(x[None, :])[0]


# --- resampling and evaluation ---------------------------------------------


def resample(X, y, seed: int, max_ratio: int = MAX_RATIO):
    """Cap the majority class at ``max_ratio`` times the minority, without replacement.

    Returns ``(X, y, indices)`` in a seeded shuffled order.
    """
    X = np.asarray(X)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) != 2:
        raise ClassifyError("resampling needs both classes present")
    rng = np.random.default_rng(seed)
    minority = classes[int(np.argmin(counts))]
    majority = classes[1 - int(np.argmin(counts))]
    if counts[0] == counts[1]:
        minority, majority = classes[0], classes[1]
    min_idx = np.flatnonzero(y == minority)
    maj_idx = np.flatnonzero(y == majority)
    keep = min(len(maj_idx), max_ratio * len(min_idx))
    chosen = np.sort(rng.choice(maj_idx, size=keep, replace=False))
    idx = rng.permutation(np.concatenate([min_idx, chosen]))
    return X[idx], y[idx], idx


@dataclass
class FoldResult:
    accuracy: float
    baseline_accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    n_test: int
    confusion: dict[str, int]


@dataclass
class EvalReport:
    weighted_f1: float
    weighted_recall: float
    weighted_precision: float
    accuracy: float
    baseline_accuracy: float
    folds: list[FoldResult]
    confusion: dict[str, int]
    positive_label: object = True

    @property
    def pooled_accuracy(self) -> float:
        c = self.confusion
        return (c["tp"] + c["tn"]) / sum(c.values())

    def as_dict(self) -> dict:
        return {
            "wgt_f1": self.weighted_f1,
            "wgt_recall": self.weighted_recall,
            "wgt_precision": self.weighted_precision,
            "accuracy": self.accuracy,
            "bl_accuracy": self.baseline_accuracy,
            "pooled_accuracy": self.pooled_accuracy,
            "confusion": dict(self.confusion),
            "folds": [vars(f) for f in self.folds],
        }


def confusion_counts(y_true, y_pred, positive) -> dict[str, int]:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    t, p = y_true == positive, y_pred == positive
    return {
        "tp": int(np.sum(t & p)),
        "fn": int(np.sum(t & ~p)),
        "fp": int(np.sum(~t & p)),
        "tn": int(np.sum(~t & ~p)),
    }


def fold_metrics(y_true, y_pred, baseline_label, labels, positive) -> FoldResult:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    prec, rec, f1, _ = precision_recall_fscore_support(
        y_true, y_pred, labels=list(labels), average="weighted", zero_division=0
    )
    return FoldResult(
        accuracy=float(np.mean(y_true == y_pred)),
        baseline_accuracy=float(np.mean(y_true == baseline_label)),
        weighted_precision=float(prec),
        weighted_recall=float(rec),
        weighted_f1=float(f1),
        n_test=len(y_true),
        confusion=confusion_counts(y_true, y_pred, positive),
    )


def cross_validate(X, y, config: EnsembleConfig = EnsembleConfig(), folds: int = 10, seed: int = 0) -> EvalReport:
    """Stratified seeded k-fold CV; headline metrics are means over held-out folds.

    The fold baseline predicts the training fold's majority class.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) != 2:
        raise ClassifyError("cross-validation needs both classes present")
    smallest = int(counts.min())
    if smallest < 2:
        raise ClassifyError("each class needs at least 2 items for cross-validation")
    if smallest < folds:
        warnings.warn(f"reducing folds from {folds} to {smallest} (smallest class size)", stacklevel=2)
        folds = smallest
    positive = classes[1]
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    results = []
    for train, test in splitter.split(X, y):
        ens = train_adaboost(X[train], y[train], config)
        results.append(fold_metrics(y[test], ens.predict(X[test]), ens.majority, classes, positive))
    totals = {k: sum(r.confusion[k] for r in results) for k in ("tp", "fn", "fp", "tn")}
    return EvalReport(
        weighted_f1=float(np.mean([r.weighted_f1 for r in results])),
        weighted_recall=float(np.mean([r.weighted_recall for r in results])),
        weighted_precision=float(np.mean([r.weighted_precision for r in results])),
        accuracy=float(np.mean([r.accuracy for r in results])),
        baseline_accuracy=float(np.mean([r.baseline_accuracy for r in results])),
        folds=results,
        confusion=totals,
        positive_label=positive.item() if hasattr(positive, "item") else positive,
    )


TASKS = ("res", "val")
SET_NAMES = {"cue": "CueSet", "cert": "CertSet"}


def task_items(vectors: Sequence[FeatureVector], task: str, feature_set: str):
    """Feature matrix and labels for RES (all tweets) or VAL (resolving tweets only)."""
    if task not in TASKS:
        raise ClassifyError(f"unknown task {task!r}")
    if feature_set not in FEATURE_SETS:
        raise ClassifyError(f"unknown feature set {feature_set!r}")
    names = FEATURE_SETS[feature_set]
    # claims kept without a resolution take no part in either task
    usable = [v for v in vectors if v.resolution_value is not None]
    if task == "res":
        items = usable
        labels = [v.is_resolving for v in items]
    else:
        items = [v for v in usable if v.is_resolving]
        labels = [v.resolution_value for v in items]
    if not items:
        raise ClassifyError(f"no items for task {task!r}")
    X = np.array([v.project(names) for v in items])
    return X, np.array(labels, dtype=bool)


def run_task(
    vectors: Sequence[FeatureVector],
    task: str,
    feature_set: str,
    config: EnsembleConfig = EnsembleConfig(),
    folds: int = 10,
) -> tuple[EvalReport, dict]:
    """Resample, cross-validate and summarise one task / feature-set pairing."""
    X, y = task_items(vectors, task, feature_set)
    Xr, yr, _ = resample(X, y, config.seed)
    report = cross_validate(Xr, yr, config, folds=folds, seed=config.seed)
    summary = {
        "task": task.upper(),
        "feature_set": SET_NAMES[feature_set],
        "n_features": int(X.shape[1]),
        "n_items": int(len(yr)),
        "n_positive": int(np.sum(yr)),
        "n_negative": int(np.sum(~yr)),
        "folds": len(report.folds),
        "seed": config.seed,
        "config": vars(config),
    }
    summary.update(report.as_dict())
    return report, summary
