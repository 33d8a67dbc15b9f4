"""Certainty scores from crowd labels and the weighted binomial-logit regressor."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit, logit
from sklearn.model_selection import KFold

from rumorlens.features import CueRatios
from rumorlens.io import atomic_write_text

LABEL_VALUES = {"uncertain": 0.0, "somewhat-certain": 1.0, "certain": 2.0, "underspecified": None}
VARIANCE_FLOOR = 1e-6
RIDGE = 1e-6


class CertaintyError(ValueError):
    pass


def aggregate_certainty(labels: Sequence[str]) -> float | None:
    """Mean of the mapped labels scaled to [0, 1]; None when no label is usable."""
    values = []
    for label in labels:
        if label not in LABEL_VALUES:
            raise CertaintyError(f"unknown certainty label {label!r}")
        v = LABEL_VALUES[label]
        if v is not None:
            values.append(v)
    if not values:
        return None
    return sum(values) / len(values) / 2.0


def observation_weights(X, y, floor: float = VARIANCE_FLOOR) -> np.ndarray:
    """Inverse normalized within-value target variance, averaged over predictors.

    For every predictor the samples are grouped by exact predictor value;
    each group's population variance of ``y`` (floored at ``floor``) is divided
    by the sum over that predictor's groups and inverted. A sample's weight is
    the mean over predictors of its groups' weights, rescaled to mean 1.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise CertaintyError("X must be (n, p) aligned with y")
    n = X.shape[0]
    if n < 2:
        raise CertaintyError("need at least 2 samples")
    per_predictor = np.empty_like(X)
    for j in range(X.shape[1]):
        keys = np.round(X[:, j], 12)
        uniq, inverse = np.unique(keys, return_inverse=True)
        variances = np.empty(len(uniq))
        for g in range(len(uniq)):
            variances[g] = max(np.var(y[inverse == g]), floor)
        normalized = variances / variances.sum()
        per_predictor[:, j] = (1.0 / normalized)[inverse]
    w = per_predictor.mean(axis=1)
    return w / w.mean()


@dataclass(frozen=True)
class GlmModel:
    intercept: float
    coef: tuple[float, float, float, float]
    converged: bool
    iterations: int
    ridge: bool = False
    link: str = field(default="logit", repr=False)
    family: str = field(default="binomial", repr=False)

    def linear_predictor(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.intercept + X @ np.asarray(self.coef)

    def predict(self, X) -> np.ndarray:
        return expit(self.linear_predictor(X))

    def to_json(self) -> str:
        d = asdict(self)
        d["coef"] = list(self.coef)
        del d["link"], d["family"]
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GlmModel":
        d = json.loads(text)
        return cls(
            intercept=float(d["intercept"]),
            coef=tuple(float(c) for c in d["coef"]),
            converged=bool(d["converged"]),
            iterations=int(d["iterations"]),
            ridge=bool(d.get("ridge", False)),
        )

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "GlmModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def quasi_loglik(beta, X, y, w) -> float:
    """Weighted binomial quasi-log-likelihood with logit link; beta[0] is the intercept."""
    beta = np.asarray(beta, dtype=float)
    eta = beta[0] + np.asarray(X, dtype=float) @ beta[1:]
    # log(mu) = -log(1+e^-eta), log(1-mu) = -log(1+e^eta)
    return float(np.sum(w * (-y * np.logaddexp(0, -eta) - (1 - y) * np.logaddexp(0, eta))))


def _check_inputs(X, y, w):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float)
    if X.ndim != 2 or X.shape[1] != 4:
        raise CertaintyError("X must have shape (n, 4)")
    if not (len(y) == len(w) == X.shape[0]):
        raise CertaintyError("X, y and w must have the same length")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise CertaintyError("non-finite input")
    if np.any((y < 0) | (y > 1)):
        raise CertaintyError("responses must lie in [0, 1]")
    if np.any(w <= 0):
        raise CertaintyError("observation weights must be positive")
    return X, y, w


def fit_glm(X, y, w=None, max_iter: int = 100, tol: float = 1e-8) -> GlmModel:
    """IRLS fit of a quasi-binomial GLM with logit link.

    Stops when the largest coefficient change drops below ``tol``. A
    singular working system falls back to adding ``RIDGE`` to its diagonal,
    which is recorded on the returned model.
    """
    X, y, w = _check_inputs(X, y, w)
    n = X.shape[0]
    if n < 6:
        raise CertaintyError("need at least 6 samples to fit 5 parameters")
    A = np.column_stack([np.ones(n), X])
    p = A.shape[1]

    ybar = float(np.clip(np.average(y, weights=w), 1e-6, 1 - 1e-6))
    beta = np.zeros(p)
    beta[0] = logit(ybar)
    used_ridge = False
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = A @ beta
        mu = expit(eta)
        var = np.clip(mu * (1 - mu), 1e-12, None)
        z = eta + (y - mu) / var
        W = w * var
        H = A.T @ (W[:, None] * A)
        rhs = A.T @ (W * z)
        if used_ridge or np.linalg.cond(H) > 1e12:
            used_ridge = True
            H = H + RIDGE * np.eye(p)
        new = np.linalg.solve(H, rhs)
        step = np.max(np.abs(new - beta))
        beta = new
        if not np.all(np.isfinite(beta)):
            raise CertaintyError("IRLS diverged to non-finite coefficients")
        if step < tol:
            converged = True
            break
    return GlmModel(
        intercept=float(beta[0]),
        coef=tuple(float(b) for b in beta[1:]),
        converged=converged,
        iterations=it,
        ridge=used_ridge,
    )


def score_equations(model: GlmModel, X, y, w) -> np.ndarray:
    """Gradient of ``quasi_loglik`` at the fitted coefficients."""
    X, y, w = _check_inputs(X, y, w)
    A = np.column_stack([np.ones(len(y)), X])
    mu = model.predict(X)
    return A.T @ (w * (y - mu))


def predict_certainty(model: GlmModel, ratios: CueRatios | Sequence[float]) -> float:
    x = ratios.as_array() if isinstance(ratios, CueRatios) else np.asarray(ratios, dtype=float)
    return float(expit(model.intercept + float(np.dot(model.coef, x))))


@dataclass(frozen=True)
class GlmCvReport:
    rmse_mean: float
    rmse_max: float
    baseline_rmse: float
    fold_rmse: tuple[float, ...]
    fold_baseline_rmse: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "rmse_mean": self.rmse_mean,
            "rmse_max": self.rmse_max,
            "baseline_rmse": self.baseline_rmse,
            "fold_rmse": list(self.fold_rmse),
            "fold_baseline_rmse": list(self.fold_baseline_rmse),
        }


def evaluate_glm_cv(X, y, folds: int = 10, seed: int = 0) -> GlmCvReport:
    """k-fold CV RMSE of the weighted GLM against a training-mean baseline.

    Observation weights are recomputed on every training fold.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) < folds:
        raise CertaintyError(f"need at least {folds} samples for {folds}-fold CV")
    model_rmse, base_rmse = [], []
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    for train, test in splitter.split(X):
        w = observation_weights(X[train], y[train])
        model = fit_glm(X[train], y[train], w)
        pred = model.predict(X[test])
        model_rmse.append(math.sqrt(float(np.mean((pred - y[test]) ** 2))))
        base = float(np.mean(y[train]))
        base_rmse.append(math.sqrt(float(np.mean((base - y[test]) ** 2))))
    return GlmCvReport(
        rmse_mean=float(np.mean(model_rmse)),
        rmse_max=float(np.max(model_rmse)),
        baseline_rmse=float(np.mean(base_rmse)),
        fold_rmse=tuple(model_rmse),
        fold_baseline_rmse=tuple(base_rmse),
    )
