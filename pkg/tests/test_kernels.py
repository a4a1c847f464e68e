import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from touchauth.learners import _core, _kernels_py
from touchauth.learners.svm import kernel_matrix
from touchauth.learners.tree import presort

compiled = pytest.importorskip("touchauth.learners._kernels")


def problem(n, d, seed, ties=False):
    g = np.random.default_rng(seed)
    X = g.standard_normal((n, d))
    if ties:
        X = np.round(X, 1)
    y = (X[:, 0] + 0.5 * g.standard_normal(n) > 0).astype(float)
    return X, y


def same(a, b):
    return all(np.array_equal(np.asarray(u), np.asarray(v)) for u, v in zip(a, b))


@given(st.integers(2, 60), st.integers(1, 8), st.integers(0, 2 ** 16), st.booleans(), st.floats(1, 4))
def test_gini_split_identical(n, d, seed, ties, min_leaf):
    X, y = problem(n, d, seed, ties)
    w = np.random.default_rng(seed).integers(0, 3, n).astype(float)
    idx = np.nonzero(w)[0]
    if len(idx) < 2:
        return
    feats = np.arange(d, dtype=np.intp)
    order = presort(X[idx])
    order = idx[order]
    args = (X, feats, y, w, np.ascontiguousarray(order), float(w.sum()), float(w @ y), min_leaf)
    assert same(compiled.gini_split(*args), _kernels_py.gini_split(*args))


@given(st.integers(2, 60), st.integers(1, 8), st.integers(0, 2 ** 16), st.booleans())
def test_newton_split_identical(n, d, seed, ties):
    X, y = problem(n, d, seed, ties)
    p = np.random.default_rng(seed).uniform(0.05, 0.95, n)
    g, h = p - y, p * (1 - p)
    feats = np.arange(d, dtype=np.intp)
    args = (X, feats, g, h, presort(X), float(g.sum()), float(h.sum()), 1.0, 0.1, 1.0)
    assert same(compiled.newton_split(*args), _kernels_py.newton_split(*args))


@pytest.mark.parametrize("kernel,gamma", [("linear", 0.0), ("rbf", 0.05), ("rbf", 2.0)])
@pytest.mark.parametrize("C", [0.1, 10.0])
def test_smo_identical(kernel, gamma, C):
    X, y = problem(120, 10, 3)
    ys = np.where(y > 0, 1.0, -1.0)
    K = kernel_matrix(X, X, kernel, gamma)
    Q = np.ascontiguousarray(ys[:, None] * ys[None, :] * K)
    Kd = np.ascontiguousarray(np.diag(K))
    assert same(compiled.smo(Q, Kd, ys, C, 1e-3, 100000), _kernels_py.smo(Q, Kd, ys, C, 1e-3, 100000))


def test_backend_selected_at_import():
    assert _core.BACKEND == "cython"
    assert _core.gini_split is compiled.gini_split


def test_pure_python_override():
    code = "from touchauth.learners import _core; print(_core.BACKEND, _core.smo.__module__)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True,
                         env={**os.environ, "TOUCHAUTH_PURE_PYTHON": "1"}).stdout.split()
    assert out == ["python", "touchauth.learners._kernels_py"]
