"""Kernel SVM trained in the dual with the SMO kernel."""
import warnings

import numpy as np

from ..errors import ConvergenceWarning
from . import _core


def kernel_matrix(A, B, kernel, gamma):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    G = A @ B.T
    if kernel == "linear":
        return G
    if kernel == "rbf":
        d2 = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * G
        return np.exp(-gamma * np.maximum(d2, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


class SVM:
    """Binary C-SVM with a linear or RBF kernel.

    Scores are ``1 / (1 + exp(-a * f(x)))`` of the signed margin ``f``. The
    slope ``a > 0`` is fit on the training margins (Platt targets, no offset),
    so the 0.5 score threshold still coincides with the separating surface.
    """

    def __init__(self, C=1.0, kernel="rbf", gamma=0.1, tol=1e-3, max_iter=100_000):
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        ys = np.where(np.asarray(y) > 0, 1.0, -1.0)
        K = kernel_matrix(X, X, self.kernel, self.gamma)
        Q = np.ascontiguousarray((ys[:, None] * ys[None, :]) * K)
        alpha, grad, n_iter = _core.smo(Q, np.ascontiguousarray(np.diag(K)), ys, float(self.C),
                                        float(self.tol), int(self.max_iter))
        self.n_iter_ = int(n_iter)
        self.converged_ = n_iter < self.max_iter
        if not self.converged_:
            warnings.warn(f"SMO hit max_iter={self.max_iter}", ConvergenceWarning, stacklevel=2)
        self.rho_ = _rho(alpha, grad, ys, self.C)
        sv = alpha > 0
        self.n_features_ = X.shape[1]
        self.support_vectors_ = X[sv]
        self.dual_coef_ = alpha[sv] * ys[sv]
        self.slope_ = _platt_slope(self.decision_function(X), ys)
        return self

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X))
        for s in range(0, len(X), 2048):
            K = kernel_matrix(X[s:s + 2048], self.support_vectors_, self.kernel, self.gamma)
            out[s:s + 2048] = K @ self.dual_coef_ - self.rho_
        return out

    def score(self, X):
        return 1.0 / (1.0 + np.exp(-self.slope_ * self.decision_function(X)))

    def to_dict(self):
        return {"C": self.C, "kernel": self.kernel, "gamma": self.gamma, "tol": self.tol,
                "max_iter": self.max_iter, "rho": self.rho_, "slope": self.slope_, "n_features": self.n_features_, "n_iter": self.n_iter_,
                "support_vectors": self.support_vectors_.tolist(),
                "dual_coef": self.dual_coef_.tolist()}

    @classmethod
    def from_dict(cls, d):
        m = cls(d["C"], d["kernel"], d["gamma"], d["tol"], d["max_iter"])
        m.rho_ = d["rho"]
        m.slope_ = d["slope"]
        m.n_iter_ = d["n_iter"]
        m.converged_ = m.n_iter_ < m.max_iter
        m.n_features_ = d["n_features"]
        m.support_vectors_ = np.array(d["support_vectors"], dtype=float).reshape(-1, m.n_features_)
        m.dual_coef_ = np.array(d["dual_coef"], dtype=float)
        return m


def _platt_slope(f, y, iters=50):
    """Slope ``a`` of ``sigmoid(a * f)`` minimizing cross-entropy against Platt's
    smoothed targets; the smoothing keeps ``a`` finite on separable data."""
    n_pos, n_neg = float(np.sum(y > 0)), float(np.sum(y < 0))
    t = np.where(y > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a = 1.0
    for _ in range(iters):
        p = 1.0 / (1.0 + np.exp(-a * f))
        grad = float(np.dot(p - t, f))
        hess = float(np.dot(p * (1.0 - p), f * f))
        if hess <= 1e-12:
            break
        step = grad / hess
        a_new = max(a - step, 0.5 * a)
        if abs(a_new - a) <= 1e-10 * a:
            a = a_new
            break
        a = a_new
    return float(a)


def _rho(alpha, grad, y, C):
    """Bias from the KKT conditions: mean over free vectors, else the feasible midpoint."""
    yG = y * grad
    upper = alpha >= C
    lower = alpha <= 0
    free = ~upper & ~lower
    if free.any():
        return float(yG[free].sum() / free.sum())
    ub_mask = (upper & (y < 0)) | (lower & (y > 0))
    lb_mask = (upper & (y > 0)) | (lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    if np.isinf(ub) or np.isinf(lb):
        return float(ub if np.isfinite(ub) else lb if np.isfinite(lb) else 0.0)
    return float((ub + lb) / 2.0)
