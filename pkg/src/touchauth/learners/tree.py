"""Array-backed binary decision trees grown with the split kernels."""
import numpy as np

from . import _core


class Tree:
    """Flat tree: ``feature[i] < 0`` marks a leaf holding ``value[i]``.

    Samples with ``x[feature] <= threshold`` go left.
    """

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    def apply(self, X):
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict(self, X):
        return self.value[self.apply(np.asarray(X, dtype=float))]

    @property
    def depth(self):
        depth = np.zeros(len(self.feature), dtype=np.int64)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


def presort(X):
    """Stable per-column argsort, shared by every node and every tree of a fit."""
    return np.argsort(X, axis=0, kind="stable")


class _Builder:
    """Depth-first grower over a presorted matrix.

    A node's per-feature sorted order is obtained by filtering the global
    order through a membership mask (large nodes) or by sorting the node's
    rows directly (small nodes). Both give the same stable order because
    node indices are kept ascending.
    """

    def __init__(self, X, max_depth, min_leaf, order=None):
        self.X = X
        self.n = len(X)
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.order = presort(X) if order is None else order
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        self.leaf_of = np.zeros(self.n, dtype=np.int64)

    def _new(self, value):
        for lst, v in ((self.feature, -1), (self.threshold, 0.0), (self.left, -1),
                       (self.right, -1), (self.value, value)):
            lst.append(v)
        return len(self.feature) - 1

    def _node_order(self, idx, feats):
        if 8 * len(idx) < self.n:
            return idx[np.argsort(self.X[np.ix_(idx, feats)], axis=0, kind="stable")]
        mask = np.zeros(self.n, dtype=bool)
        mask[idx] = True
        sub = self.order[:, feats].T
        return sub[mask[sub]].reshape(len(feats), len(idx)).T

    def grow(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        root = self._new(self.leaf_value(idx))
        stack = [(root, idx, 0)]
        while stack:
            node, idx, depth = stack.pop()
            self.leaf_of[idx] = node
            if depth >= self.max_depth or self.too_small(idx) or self.pure(idx):
                continue
            feats = self.candidate_features()
            order = self._node_order(idx, feats)
            col, pos = self.split(idx, feats, order)
            if col < 0:
                continue
            o = order[:, col]
            f = int(feats[col])
            lo, hi = self.X[o[pos], f], self.X[o[pos + 1], f]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            left_idx = np.sort(o[: pos + 1])
            right_idx = np.sort(o[pos + 1:])
            self.feature[node] = f
            self.threshold[node] = float(thr)
            self.left[node] = self._new(self.leaf_value(left_idx))
            self.right[node] = self._new(self.leaf_value(right_idx))
            stack.append((self.right[node], right_idx, depth + 1))
            stack.append((self.left[node], left_idx, depth + 1))
        return Tree(self.feature, self.threshold, self.left, self.right, self.value)


class GiniBuilder(_Builder):
    """Classification tree; leaves hold the weighted positive-class fraction.

    ``weights`` are bootstrap multiplicities; rows with zero weight are
    simply not passed to :meth:`grow`.
    """

    def __init__(self, X, y, max_depth, min_leaf=1, max_features=None, rng=None,
                 weights=None, order=None):
        super().__init__(X, max_depth, min_leaf, order)
        self.y = np.asarray(y, dtype=float)
        self.w = np.ones(self.n) if weights is None else np.asarray(weights, dtype=float)
        self.max_features = max_features
        self.rng = rng

    def leaf_value(self, idx):
        w = self.w[idx]
        return float(np.dot(w, self.y[idx]) / w.sum())

    def too_small(self, idx):
        return self.w[idx].sum() < 2 * self.min_leaf

    def pure(self, idx):
        ys = self.y[idx]
        return ys.min() == ys.max()

    def candidate_features(self):
        d = self.X.shape[1]
        if self.max_features is None or self.max_features >= d:
            return np.arange(d, dtype=np.intp)
        return np.sort(self.rng.choice(d, size=self.max_features, replace=False)).astype(np.intp)

    def split(self, idx, feats, order):
        w = self.w[idx]
        tw = float(w.sum())
        t1 = float(np.dot(w, self.y[idx]))
        col, pos, cost = _core.gini_split(self.X, feats, self.y, self.w, order, tw, t1,
                                          float(self.min_leaf))
        if col < 0:
            return -1, -1
        parent = tw - (t1 * t1 + (tw - t1) * (tw - t1)) / tw
        if not cost < parent - 1e-12:
            return -1, -1
        return col, pos


class NewtonBuilder(_Builder):
    """Regression tree on gradient/hessian statistics; leaves hold ``-G/(H+lam)``."""

    def __init__(self, X, g, h, max_depth, lam=1.0, min_child_weight=1.0, min_leaf=1, gamma=0.0,
                 order=None):
        super().__init__(X, max_depth, min_leaf, order)
        self.g, self.h = g, h
        self.lam, self.mcw, self.gamma = lam, min_child_weight, gamma

    def leaf_value(self, idx):
        return float(-self.g[idx].sum() / (self.h[idx].sum() + self.lam))

    def too_small(self, idx):
        return len(idx) < 2 * self.min_leaf

    def pure(self, idx):
        return False

    def candidate_features(self):
        return np.arange(self.X.shape[1], dtype=np.intp)

    def split(self, idx, feats, order):
        col, pos, gain = _core.newton_split(self.X, feats, self.g, self.h, order,
                                            float(self.g[idx].sum()), float(self.h[idx].sum()),
                                            self.lam, self.mcw, float(self.min_leaf))
        if col < 0 or not gain > self.gamma:
            return -1, -1
        return col, pos
