"""Sliding windows of consecutive swipes, aggregated by per-feature mean."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .features import FeatureTable

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowConfig:
    p: int = 5
    q: int = 1

    def __post_init__(self):
        if self.p < 1:
            raise ConfigError("window.p must be >= 1")
        if not 1 <= self.q <= self.p:
            raise ConfigError("window.q must satisfy 1 <= q <= p")


def window_starts(n, cfg: WindowConfig):
    if n < cfg.p:
        return np.empty(0, dtype=np.int64)
    return np.arange(0, n - cfg.p + 1, cfg.q, dtype=np.int64)


def windows(vectors, cfg: WindowConfig = WindowConfig()):
    """Mean-aggregate every ``p`` consecutive rows, sliding by ``q``.

    Parameters
    ----------
    vectors : (N, d) array
        One user's feature rows in swipe-time order.

    Returns
    -------
    agg : (W, d) array
        ``W = (N - p) // q + 1`` for ``N >= p``, else 0.
    members : (W, p) int array
        Row indices of each window.
    """
    X = np.asarray(vectors, dtype=float)
    starts = window_starts(len(X), cfg)
    if len(starts) == 0:
        log.warning("only %d swipes, fewer than window size %d; no windows", len(X), cfg.p)
        return np.empty((0, X.shape[1] if X.ndim == 2 else 0)), np.empty((0, cfg.p), dtype=np.int64)
    members = starts[:, None] + np.arange(cfg.p)[None, :]
    agg = X[members].mean(axis=1)
    # mean of identical values must reproduce them exactly
    same = np.all(X[members] == X[members][:, :1, :], axis=1)
    agg = np.where(same, X[members][:, 0, :], agg)
    return agg, members


def window_table(table: FeatureTable, cfg: WindowConfig = WindowConfig()) -> FeatureTable:
    """Window every user's rows (already in time order). ``ids`` become window ids.

    ``extra['members']`` holds the member swipe ids joined by ``;``.
    """
    out_X, out_users, out_ids, members_col = [], [], [], []
    for user in table.user_ids():
        sub = table.for_user(user)
        order = np.argsort(sub.ids, kind="stable")
        agg, members = windows(sub.X[order], cfg)
        ids_sorted = sub.ids[order]
        out_X.append(agg)
        out_users.extend([user] * len(agg))
        out_ids.extend(range(len(agg)))
        members_col.extend(";".join(str(int(v)) for v in ids_sorted[m]) for m in members)
    X = np.vstack(out_X) if out_X else np.empty((0, table.X.shape[1]))
    return FeatureTable(X, np.array(out_users, dtype=object), np.array(out_ids, dtype=np.int64),
                        table.device, {"members": np.array(members_col, dtype=object)})
