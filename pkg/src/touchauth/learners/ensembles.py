"""Bagged Gini forests and second-order gradient boosted trees."""
import math

import numpy as np

from .tree import GiniBuilder, NewtonBuilder, Tree, presort


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class RandomForest:
    """Bootstrap-aggregated CART classifiers with per-node feature subsampling.

    The score is the mean over trees of the leaf's genuine-class fraction.
    """

    def __init__(self, n_trees=100, max_depth=8, max_features="sqrt", min_leaf=1, seed=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_leaf = min_leaf
        self.seed = seed

    def _n_features(self, d):
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(d)))
        if self.max_features is None:
            return d
        return int(self.max_features)

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, d = X.shape
        mf = self._n_features(d)
        order = presort(X)
        self.trees_ = []
        for t in range(self.n_trees):
            g = np.random.default_rng([self.seed, t])
            w = np.bincount(g.integers(0, n, size=n), minlength=n).astype(float)
            builder = GiniBuilder(X, y, self.max_depth, self.min_leaf, mf, g, weights=w, order=order)
            self.trees_.append(builder.grow(np.nonzero(w)[0]))
        return self

    def staged_scores(self, X, counts):
        """Scores of the sub-forests made of the first ``c`` trees, for each ``c``.

        Tree ``t`` depends only on ``(seed, t)``, so each entry equals the score of
        a forest fit with ``n_trees=c``.
        """
        X = np.asarray(X, dtype=float)
        total = np.zeros(len(X))
        out = {}
        for t, tree in enumerate(self.trees_, 1):
            total += tree.predict(X)
            if t in counts:
                out[t] = total / t
        return out

    def score(self, X):
        return self.staged_scores(X, {len(self.trees_)})[len(self.trees_)]

    def to_dict(self):
        return {"n_trees": self.n_trees, "max_depth": self.max_depth,
                "max_features": self.max_features, "min_leaf": self.min_leaf, "seed": self.seed,
                "trees": [t.to_dict() for t in self.trees_]}

    @classmethod
    def from_dict(cls, d):
        m = cls(d["n_trees"], d["max_depth"], d["max_features"], d["min_leaf"], d["seed"])
        m.trees_ = [Tree.from_dict(t) for t in d["trees"]]
        return m


class GradientBoosting:
    """Logistic-loss boosting; each tree is fit on gradients and hessians and
    its leaves take Newton steps ``-G / (H + lam)`` shrunk by ``learning_rate``."""

    def __init__(self, n_trees=100, max_depth=3, learning_rate=0.1, lam=1.0, min_child_weight=1.0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.lam = lam
        self.min_child_weight = min_child_weight

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        p0 = min(max(y.mean(), 1e-6), 1 - 1e-6)
        self.base_ = float(math.log(p0 / (1 - p0)))
        F = np.full(len(X), self.base_)
        idx = np.arange(len(X))
        order = presort(X)
        self.trees_ = []
        for _ in range(self.n_trees):
            p = _sigmoid(F)
            g = p - y
            h = np.maximum(p * (1.0 - p), 1e-16)
            builder = NewtonBuilder(X, g, h, self.max_depth, self.lam, self.min_child_weight,
                                    order=order)
            tree = builder.grow(idx)
            tree.value *= self.learning_rate
            # training rows already know their leaf
            F += tree.value[builder.leaf_of]
            self.trees_.append(tree)
        return self

    def staged_raw(self, X, counts):
        """Raw margins after the first ``c`` rounds, for each ``c`` in ``counts``."""
        X = np.asarray(X, dtype=float)
        F = np.full(len(X), self.base_)
        out = {}
        for t, tree in enumerate(self.trees_, 1):
            F += tree.predict(X)
            if t in counts:
                out[t] = F.copy()
        return out

    def staged_scores(self, X, counts):
        return {c: _sigmoid(F) for c, F in self.staged_raw(X, counts).items()}

    def raw(self, X):
        return self.staged_raw(X, {len(self.trees_)})[len(self.trees_)]

    def score(self, X):
        return _sigmoid(self.raw(X))

    def to_dict(self):
        return {"n_trees": self.n_trees, "max_depth": self.max_depth,
                "learning_rate": self.learning_rate, "lam": self.lam,
                "min_child_weight": self.min_child_weight, "base": self.base_,
                "trees": [t.to_dict() for t in self.trees_]}

    @classmethod
    def from_dict(cls, d):
        m = cls(d["n_trees"], d["max_depth"], d["learning_rate"], d["lam"], d["min_child_weight"])
        m.base_ = d["base"]
        m.trees_ = [Tree.from_dict(t) for t in d["trees"]]
        return m
