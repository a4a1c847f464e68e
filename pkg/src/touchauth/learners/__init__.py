"""Binary genuine/impostor verifiers: SVM, random forest, MLP and boosted trees."""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import (ConvergenceWarning, CorruptModel, DegenerateLabels, DimensionMismatch,
                      InsufficientData, SchemaVersionError, ConfigError)
from ..features import Standardizer
from ._core import BACKEND
from .ensembles import GradientBoosting, RandomForest
from .mlp import MLP
from .svm import SVM

ALGORITHMS = ("svm", "random_forest", "mlp", "gbt")
SCHEMA_VERSION = 1
_SCALED = {"svm", "mlp"}
_CLASSES = {"svm": SVM, "random_forest": RandomForest, "mlp": MLP, "gbt": GradientBoosting}

DEFAULT_GRIDS = {
    "svm": [{"C": C, "kernel": "linear"} for C in (0.1, 1.0, 10.0)]
    + [{"C": C, "kernel": "rbf", "gamma": g} for C in (0.1, 1.0, 10.0) for g in (0.01, 0.1, 1.0)],
    "random_forest": {"n_trees": [100, 300], "max_depth": [8, 16]},
    "mlp": {"hidden": [[32], [64, 32]], "lr": [1e-2, 1e-3]},
    "gbt": {"n_trees": [100, 300], "max_depth": [3, 5], "learning_rate": [0.1, 0.3]},
}


def expand_grid(grid):
    """A grid is either a list of candidate dicts or a dict of value lists (product)."""
    if isinstance(grid, dict):
        keys = list(grid)
        cands = [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]
    else:
        cands = [dict(c) for c in grid]
    if not cands:
        raise ConfigError("hyperparameter grid is empty")
    return cands


def capacity(algorithm, hp):
    """Sort key where smaller means lower model capacity (tie-break in tuning)."""
    if algorithm == "svm":
        return (hp.get("C", 1.0), 0.0 if hp.get("kernel", "rbf") == "linear" else hp.get("gamma", 0.1))
    if algorithm == "random_forest":
        return (hp.get("n_trees", 100), hp.get("max_depth", 8))
    if algorithm == "mlp":
        hidden = hp.get("hidden", [32])
        return (sum(hidden), len(hidden))
    return (hp.get("n_trees", 100), hp.get("max_depth", 3), hp.get("learning_rate", 0.1))


@dataclass
class ClassifierModel:
    algorithm: str
    estimator: object
    hyperparams: dict
    standardizer: Standardizer | None = None
    n_features: int = 47
    meta: dict = field(default_factory=dict)


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise DimensionMismatch("X must be 2-D with one label per row")
    if not np.all(np.isfinite(X)):
        raise ValueError("training features contain non-finite values")
    labels = set(np.unique(y).tolist())
    if not labels <= {0, 1}:
        raise ValueError(f"labels must be 0/1, got {sorted(labels)}")
    if len(labels) < 2:
        raise DegenerateLabels("training labels contain a single class")
    return X, y.astype(np.int64)


def _build(algorithm, hp, seed):
    if algorithm not in _CLASSES:
        raise ConfigError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    hp = dict(hp)
    if algorithm in ("random_forest", "mlp"):
        hp.setdefault("seed", seed)
    try:
        return _CLASSES[algorithm](**hp)
    except TypeError as exc:
        raise ConfigError(f"bad hyperparameters for {algorithm}: {exc}") from None


def train(algorithm, X, y, hyperparams=None, seed=0) -> ClassifierModel:
    """Fit one verifier. SVM and MLP see z-scored features, trees see raw ones."""
    X, y = _check_xy(X, y)
    hyperparams = dict(hyperparams or {})
    std = Standardizer.fit(X) if algorithm in _SCALED else None
    est = _build(algorithm, hyperparams, seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        est.fit(std.transform(X) if std else X, y)
    meta = {"seed": seed, "n_train": int(len(X)), "backend": BACKEND,
            "warnings": [str(w.message) for w in caught if issubclass(w.category, ConvergenceWarning)]}
    return ClassifierModel(algorithm, est, hyperparams, std, X.shape[1], meta)


def predict_score(model: ClassifierModel, X):
    """Genuine-class score in [0, 1]; a single vector gives a 1-element array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got {X.shape[1]}")
    if len(X) == 0:
        return np.empty(0)
    if model.standardizer is not None:
        X = model.standardizer.transform(X)
    return np.clip(model.estimator.score(X), 0.0, 1.0)


def predict_label(model, X, threshold=0.5):
    return (predict_score(model, X) >= threshold).astype(np.int64)


def balanced_accuracy(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    pos, neg = y_true == 1, y_true == 0
    tpr = float(np.mean(y_pred[pos] == 1)) if pos.any() else 0.0
    tnr = float(np.mean(y_pred[neg] == 0)) if neg.any() else 0.0
    return (tpr + tnr) / 2.0


def stratified_folds(y, k=5, seed=0):
    """Fold index per sample; each class is shuffled then dealt round-robin."""
    y = np.asarray(y)
    fold = np.empty(len(y), dtype=np.int64)
    g = np.random.default_rng(seed)
    for label in (0, 1):
        idx = np.nonzero(y == label)[0]
        idx = idx[g.permutation(len(idx))]
        fold[idx] = np.arange(len(idx)) % k
    return fold


def tune(algorithm, X, y, grid=None, k=5, seed=0):
    """Stratified k-fold search maximizing mean balanced accuracy.

    Returns ``(best_hyperparams, results)`` where ``results`` lists every
    candidate with its per-fold scores, in grid order.
    """
    X, y = _check_xy(X, y)
    if k < 2:
        raise ConfigError("k must be >= 2")
    if min(int((y == 0).sum()), int((y == 1).sum())) < k:
        raise InsufficientData(f"need at least {k} samples per class for {k}-fold CV")
    cands = expand_grid(DEFAULT_GRIDS[algorithm] if grid is None else grid)
    fold = stratified_folds(y, k, seed)
    scores = [[] for _ in cands]
    for group in _staged_groups(algorithm, cands):
        counts = {cands[i].get("n_trees", 100) for i in group}
        hp = dict(cands[group[0]], n_trees=max(counts)) if len(group) > 1 else cands[group[0]]
        for f in range(k):
            tr, te = fold != f, fold == f
            m = train(algorithm, X[tr], y[tr], hp, seed)
            if len(group) == 1:
                scores[group[0]].append(balanced_accuracy(y[te], predict_label(m, X[te])))
                continue
            staged = m.estimator.staged_scores(X[te], counts)
            for i in group:
                s = np.clip(staged[cands[i].get("n_trees", 100)], 0.0, 1.0)
                scores[i].append(balanced_accuracy(y[te], (s >= 0.5).astype(np.int64)))
    results = [{"hyperparams": hp, "fold_scores": sc, "mean": float(np.mean(sc))}
               for hp, sc in zip(cands, scores)]
    best = max(range(len(cands)),
               key=lambda i: (results[i]["mean"], _neg(capacity(algorithm, cands[i])), -i))
    return cands[best], results


def _staged_groups(algorithm, cands):
    """Group tree-ensemble candidates that differ only in ``n_trees``.

    A fit with the largest count yields every smaller count as a prefix, with
    the same result as a separate fit.
    """
    if algorithm not in ("random_forest", "gbt"):
        return [[i] for i in range(len(cands))]
    groups = {}
    for i, hp in enumerate(cands):
        key = json.dumps({k: v for k, v in hp.items() if k != "n_trees"}, sort_keys=True)
        groups.setdefault(key, []).append(i)
    return list(groups.values())


def _neg(t):
    return tuple(-v for v in t)


# --------------------------------------------------------------------------
# persistence

def model_to_dict(model: ClassifierModel):
    return {
        "schema_version": SCHEMA_VERSION,
        "algorithm": model.algorithm,
        "hyperparams": model.hyperparams,
        "n_features": model.n_features,
        "standardizer": model.standardizer.to_dict() if model.standardizer else None,
        "meta": model.meta,
        "estimator": model.estimator.to_dict(),
    }


def model_from_dict(d) -> ClassifierModel:
    if not isinstance(d, dict) or "schema_version" not in d:
        raise CorruptModel("model document has no schema_version")
    if d["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionError(f"model schema_version {d['schema_version']!r}, expected {SCHEMA_VERSION}")
    try:
        algo = d["algorithm"]
        est = _CLASSES[algo].from_dict(d["estimator"])
        std = Standardizer.from_dict(d["standardizer"]) if d["standardizer"] else None
        return ClassifierModel(algo, est, d["hyperparams"], std, d["n_features"], d["meta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"cannot rebuild model: {exc}") from None


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"), allow_nan=False)


def save_model(model, path):
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path) -> ClassifierModel:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"{path}: {exc}") from None
    return model_from_dict(d)


def model_filename(user, algorithm, mode):
    return f"{user}_{algorithm}_{mode}.model.json"
