"""Compiled vs pure-numpy kernels: timings and a bit-identity check.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 732]

The row count defaults to the size of a G-TCAS training set at desk scale
(116 genuine + 116 impostor windows + 2 x 250 GAN rows).
"""
import argparse
import timeit

import numpy as np

from touchauth.learners import _core, _kernels_py
from touchauth.learners.ensembles import GradientBoosting, RandomForest
from touchauth.learners.svm import kernel_matrix
from touchauth.learners.tree import presort

try:
    from touchauth.learners import _kernels as _compiled
except ImportError:
    _compiled = None


def problem(n, d, seed):
    g = np.random.default_rng(seed)
    X = g.standard_normal((n, d))
    y = (X[:, 0] + 0.5 * X[:, 1] + 0.3 * g.standard_normal(n) > 0).astype(float)
    return X, y


def kernel_cases(X, y):
    n, d = X.shape
    order = presort(X)
    feats = np.arange(d, dtype=np.intp)
    w = np.ones(n)
    p = np.full(n, y.mean())
    g, h = p - y, p * (1 - p)
    ys = np.where(y > 0, 1.0, -1.0)
    K = kernel_matrix(X, X, "rbf", 0.05)
    Q = (ys[:, None] * ys[None, :]) * K
    Kd = np.ascontiguousarray(np.diag(K))
    return {
        "gini_split": lambda m: m.gini_split(X, feats, y, w, order, float(n), float(y.sum()), 1.0),
        "newton_split": lambda m: m.newton_split(X, feats, g, h, order, float(g.sum()), float(h.sum()),
                                                 1.0, 1.0, 1.0),
        "smo": lambda m: m.smo(Q, Kd, ys, 1.0, 1e-3, 100000),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(u, v) for u, v in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def with_backend(mod, fn):
    saved = (_core.gini_split, _core.newton_split, _core.smo)
    _core.gini_split, _core.newton_split, _core.smo = mod.gini_split, mod.newton_split, mod.smo
    try:
        return fn()
    finally:
        _core.gini_split, _core.newton_split, _core.smo = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=732)
    ap.add_argument("--d", type=int, default=47)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _compiled is None:
        print("compiled extension not built; only the numpy backend is available")
        return
    X, y = problem(args.n, args.d, 0)
    print(f"rows={args.n} features={args.d}  (best of {args.repeat})")
    print(f"{'kernel':<14}{'cython ms':>12}{'numpy ms':>12}{'speedup':>10}  identical")
    for name, call in kernel_cases(X, y).items():
        t_c = min(timeit.repeat(lambda: call(_compiled), number=1, repeat=args.repeat))
        t_p = min(timeit.repeat(lambda: call(_kernels_py), number=1, repeat=args.repeat))
        ok = same(call(_compiled), call(_kernels_py))
        print(f"{name:<14}{1e3 * t_c:>12.2f}{1e3 * t_p:>12.2f}{t_p / t_c:>10.1f}  {ok}")

    fits = {
        "forest fit": lambda: RandomForest(30, 8, seed=1).fit(X, y).score(X),
        "boosting fit": lambda: GradientBoosting(30, 3, 0.1).fit(X, y).score(X),
    }
    for name, fit in fits.items():
        t_c = min(timeit.repeat(lambda: with_backend(_compiled, fit), number=1, repeat=max(1, args.repeat // 2)))
        t_p = min(timeit.repeat(lambda: with_backend(_kernels_py, fit), number=1, repeat=max(1, args.repeat // 2)))
        ok = np.array_equal(with_backend(_compiled, fit), with_backend(_kernels_py, fit))
        print(f"{name:<14}{1e3 * t_c:>12.2f}{1e3 * t_p:>12.2f}{t_p / t_c:>10.1f}  {ok}")


if __name__ == "__main__":
    main()
