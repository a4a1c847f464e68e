"""Impostor under-sampling and ADASYN over-sampling into balanced training sets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ImbalanceError, InsufficientData
from .features import Standardizer


@dataclass(frozen=True)
class AdasynConfig:
    K: int = 5
    beta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError("adasyn.K must be >= 1")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("adasyn.beta must lie in [0, 1]")


def undersample_impostors(per_user, genuine_user, per_impostor=4, seed=0):
    """Draw up to ``per_impostor`` rows from every other user without replacement.

    Parameters
    ----------
    per_user : dict
        ``{user: (N_u, d) array}``.

    Returns
    -------
    X : (M, d) array
    picks : list of ``(user, row_index)`` in draw order, for provenance.
    """
    others = [u for u in sorted(per_user) if u != genuine_user]
    if not others:
        raise InsufficientData("impostor sampling needs at least 2 users")
    g = np.random.default_rng(seed)
    rows, picks = [], []
    for u in others:
        X = np.asarray(per_user[u])
        k = min(per_impostor, len(X))
        if k == 0:
            continue
        idx = np.sort(g.choice(len(X), size=k, replace=False))
        rows.append(X[idx])
        picks.extend((u, int(i)) for i in idx)
    d = np.asarray(per_user[genuine_user] if genuine_user in per_user else per_user[others[0]]).shape[1]
    return (np.vstack(rows) if rows else np.empty((0, d))), picks


def adasyn_allocation(minority, majority, K=5, beta=1.0):
    """Per-seed synthesis counts ``g`` and majority-neighbour ratios ``r``.

    Distances are Euclidean on features standardized over the combined set.
    """
    minority = np.asarray(minority, dtype=float)
    majority = np.asarray(majority, dtype=float)
    n_min, n_maj = len(minority), len(majority)
    if n_min > n_maj:
        raise ImbalanceError(f"minority ({n_min}) larger than majority ({n_maj})")
    G = int(round((n_maj - n_min) * beta))
    if G <= 0:
        return np.zeros(n_min, dtype=np.int64), np.zeros(n_min), 0
    combined = np.vstack([minority, majority])
    Z = Standardizer.fit(combined).transform(combined)
    k = min(K, len(combined) - 1)
    d2 = ((Z[:n_min, None, :] - Z[None, :, :]) ** 2).sum(axis=2)
    d2[np.arange(n_min), np.arange(n_min)] = np.inf
    nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
    r = (nn >= n_min).sum(axis=1) / k
    total = r.sum()
    if total == 0:
        r_hat = np.full(n_min, 1.0 / n_min)
    else:
        r_hat = r / total
    g = np.floor(r_hat * G + 0.5).astype(np.int64)
    # repair rounding so the budget is met exactly; highest density first
    order = np.argsort(-r_hat, kind="stable")
    diff = G - int(g.sum())
    i = 0
    while diff != 0:
        j = order[i % n_min]
        if diff > 0:
            g[j] += 1
            diff -= 1
        elif g[j] > 0:
            g[j] -= 1
            diff += 1
        i += 1
    return g, r, G


def adasyn(minority, majority, cfg: AdasynConfig = AdasynConfig(), return_pairs=False):
    """Synthesize minority rows along segments to minority neighbours.

    Returns an ``(G, d)`` array; with ``return_pairs`` also the ``(seed,
    neighbour, lambda)`` triple behind every synthetic row.
    """
    minority = np.asarray(minority, dtype=float)
    majority = np.asarray(majority, dtype=float)
    if len(minority) < 2:
        raise InsufficientData("ADASYN needs at least 2 minority samples")
    if minority.shape[1] != majority.shape[1]:
        raise ValueError("minority and majority feature dimensions differ")
    g, _, G = adasyn_allocation(minority, majority, cfg.K, cfg.beta)
    d = minority.shape[1]
    if G == 0:
        empty = np.empty((0, d))
        return (empty, np.empty((0, 3))) if return_pairs else empty
    Zm = Standardizer.fit(np.vstack([minority, majority])).transform(minority)
    d2 = ((Zm[:, None, :] - Zm[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    k = min(cfg.K, len(minority) - 1)
    nn_min = np.argsort(d2, axis=1, kind="stable")[:, :k]
    rand = np.random.default_rng(cfg.seed)
    out = np.empty((G, d))
    pairs = np.empty((G, 3))
    row = 0
    for i in range(len(minority)):
        for _ in range(int(g[i])):
            z = nn_min[i, rand.integers(k)]
            lam = rand.random()
            out[row] = minority[i] + lam * (minority[z] - minority[i])
            pairs[row] = i, z, lam
            row += 1
    return (out, pairs) if return_pairs else out


def balance_training_set(genuine, impostor, cfg: AdasynConfig = AdasynConfig()):
    """Equalize class sizes: ADASYN grows the smaller class, a seeded draw trims overshoot.

    Returns ``(X, y)`` with genuine rows first (label 1) then impostor rows (label 0).
    """
    genuine = np.asarray(genuine, dtype=float)
    impostor = np.asarray(impostor, dtype=float)
    if len(genuine) == 0 or len(impostor) == 0:
        raise InsufficientData("both classes must be non-empty")
    if len(genuine) < len(impostor):
        genuine = np.vstack([genuine, adasyn(genuine, impostor, cfg)])
    elif len(impostor) < len(genuine):
        impostor = np.vstack([impostor, adasyn(impostor, genuine, cfg)])
    n = min(len(genuine), len(impostor))
    trim = np.random.default_rng([cfg.seed, 1])
    if len(genuine) > n:
        genuine = genuine[np.sort(trim.choice(len(genuine), n, replace=False))]
    if len(impostor) > n:
        impostor = impostor[np.sort(trim.choice(len(impostor), n, replace=False))]
    X = np.vstack([genuine, impostor])
    y = np.concatenate([np.ones(len(genuine), dtype=np.int64), np.zeros(len(impostor), dtype=np.int64)])
    return X, y
