"""Per-swipe kinematics and the 47-value swipe feature vector.

Conventions used throughout:

* time in milliseconds, distances in pixels, velocities in px/ms;
* pairwise sequences are indexed by the later point of each pair;
* ``velocity``-flavoured features use displacement (chord) geometry and
  ``speed``-flavoured ones use path length. The signed velocity distribution
  behind ``vP*`` is the pairwise velocity projected on the start-to-end
  direction, while ``sP*`` / ``mean_v`` use the pairwise magnitude;
* percentiles interpolate linearly between order statistics;
* ``initial_*`` / ``final_*`` use the first / last
  ``max(2, ceil(0.05 * (n - 1)))`` pairwise entries.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateSwipe, SchemaError, RowValueError

FEATURE_NAMES = (
    "swipe_duration", "start_x", "start_y", "end_x", "end_y", "dp", "l",
    "velocity", "initial_v", "final_v", "mean_v", "direction", "area",
    "acceleration", "mean_a", "initial_a", "final_a",
    "aP25", "aP50", "aP75", "vP25", "vP50", "vP75",
    "speed", "initial_s", "final_s", "sP25", "sP50", "sP75",
    "mean_v_x", "mean_v_y", "mean_a_x", "mean_a_y", "mean_d", "max_d",
    "vxP25", "vxP50", "vxP75", "vyP25", "vyP50", "vyP75",
    "axP25", "axP50", "axP75", "ayP25", "ayP50", "ayP75",
)
N_FEATURES = len(FEATURE_NAMES)
INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}
PERCENTILES = (25.0, 50.0, 75.0)


@dataclass
class Kinematics:
    v_x: np.ndarray
    v_y: np.ndarray
    a_x: np.ndarray
    a_y: np.ndarray
    speed: np.ndarray
    dev: np.ndarray
    m: float
    c: float


@dataclass
class FeatureTable:
    """Feature rows with provenance; ``ids`` are swipe or window ids."""

    X: np.ndarray
    users: np.ndarray
    ids: np.ndarray
    device: str = "phone"
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.X)

    def for_user(self, user):
        mask = self.users == user
        return FeatureTable(self.X[mask], self.users[mask], self.ids[mask], self.device)

    def user_ids(self):
        return sorted(set(self.users.tolist()))


def _chord_deviation(x, y):
    """Distance of every point from the start-end chord, plus the chord's slope form.

    The distance is evaluated as ``|dx (y - y0) - dy (x - x0)| / dp``, which
    equals ``|y - m x - c| / sqrt(1 + m^2)`` but needs no slope, so vertical
    chords need no special case and collinear points give exact zeros.
    """
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    if dx == 0.0 and dy == 0.0:
        return np.hypot(x - x[0], y - y[0]), 0.0, float(y[0])
    d = np.abs(dx * (y - y[0]) - dy * (x - x[0])) / math.hypot(dx, dy)
    if dx == 0.0:
        return d, math.inf, math.nan
    m = dy / dx
    return d, m, y[0] - m * x[0]


def kinematics(swipe) -> Kinematics:
    """Pairwise velocities, accelerations and chord deviations of a swipe.

    ``swipe`` is a :class:`~touchauth.ingest.Swipe` or an ``(n, 5)`` array of
    ``x, y, t, a, b``.
    """
    arr = swipe if isinstance(swipe, np.ndarray) else swipe.to_array()
    x, y, t = arr[:, 0], arr[:, 1], arr[:, 2]
    if len(x) < 3:
        raise DegenerateSwipe("need at least 3 points for accelerations")
    if np.all(x == x[0]) and np.all(y == y[0]):
        raise DegenerateSwipe("all points coincide")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise DegenerateSwipe("timestamps must be strictly increasing")
    v_x = np.diff(x) / dt
    v_y = np.diff(y) / dt
    a_x = np.diff(v_x) / dt[1:]
    a_y = np.diff(v_y) / dt[1:]
    dev, m, c = _chord_deviation(x, y)
    return Kinematics(v_x, v_y, a_x, a_y, np.hypot(v_x, v_y), dev, m, c)


def edge_window(n_points):
    return max(2, math.ceil(0.05 * (n_points - 1)))


def extract_features(swipe) -> np.ndarray:
    """Return the 47 swipe features in :data:`FEATURE_NAMES` order."""
    arr = swipe if isinstance(swipe, np.ndarray) else swipe.to_array()
    k = kinematics(arr)
    x, y, t, a, b = arr.T
    n = len(x)
    duration = t[-1] - t[0]
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    dp = math.hypot(dx, dy)
    steps = np.hypot(np.diff(x), np.diff(y))
    length = float(np.sum(steps))
    w = edge_window(n)

    def span_velocity(i, j):
        return math.hypot(x[j] - x[i], y[j] - y[i]) / (t[j] - t[i])

    def span_speed(i, j):
        return float(np.sum(steps[i:j])) / (t[j] - t[i])

    initial_v = span_velocity(0, w)
    final_v = span_velocity(n - 1 - w, n - 1)
    initial_s = span_speed(0, w)
    final_s = span_speed(n - 1 - w, n - 1)

    acc = np.hypot(k.a_x, k.a_y)
    if dp > 0:
        v_proj = (k.v_x * dx + k.v_y * dy) / dp
    else:
        v_proj = k.speed

    def pct(seq):
        return np.percentile(seq, PERCENTILES)

    out = np.empty(N_FEATURES)
    out[0:7] = duration, x[0], y[0], x[-1], y[-1], dp, length
    out[7:13] = (dp / duration, initial_v, final_v, float(np.mean(k.speed)),
                 math.atan2(dy, dx), float(np.mean(math.pi * a * b)))
    out[13:17] = ((final_v - initial_v) / duration, float(np.mean(acc)),
                  float(np.mean(acc[:w])), float(np.mean(acc[-w:])))
    out[17:20] = pct(acc)
    out[20:23] = pct(v_proj)
    out[23:26] = length / duration, initial_s, final_s
    out[26:29] = pct(k.speed)
    out[29:35] = (np.mean(k.v_x), np.mean(k.v_y), np.mean(k.a_x), np.mean(k.a_y),
                  np.mean(k.dev), np.max(k.dev))
    out[35:38] = pct(k.v_x)
    out[38:41] = pct(k.v_y)
    out[41:44] = pct(k.a_x)
    out[44:47] = pct(k.a_y)
    return out


def extract_table(dataset, skipped=None) -> FeatureTable:
    """Feature rows for every swipe of a dataset, users sorted, swipes in id order.

    If ``skipped`` is a list, degenerate swipes are appended to it as
    ``(user, swipe_id)`` and left out; otherwise they raise.
    """
    rows, users, ids = [], [], []
    for user in sorted(dataset.users):
        for s in dataset.users[user]:
            try:
                rows.append(extract_features(s))
            except DegenerateSwipe:
                if skipped is None:
                    raise
                skipped.append((user, s.swipe_id))
                continue
            users.append(user)
            ids.append(s.swipe_id)
    X = np.vstack(rows) if rows else np.empty((0, N_FEATURES))
    return FeatureTable(X, np.array(users, dtype=object), np.array(ids, dtype=np.int64), dataset.device)


# --------------------------------------------------------------------------
# standardization

@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @property
    def constant(self):
        """Boolean mask of zero-variance features, passed through unchanged."""
        return self.std == 0

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        if len(X) == 0:
            raise ValueError("cannot standardize an empty matrix")
        return cls(X.mean(axis=0), X.std(axis=0))

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        const = self.constant
        scale = np.where(const, 1.0, self.std)
        shift = np.where(const, 0.0, self.mean)
        return (X - shift) / scale

    def inverse(self, Z):
        Z = np.asarray(Z, dtype=float)
        const = self.constant
        scale = np.where(const, 1.0, self.std)
        shift = np.where(const, 0.0, self.mean)
        return Z * scale + shift

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=float), np.array(d["std"], dtype=float))


def standardize(train_vectors, apply_to=None):
    """Z-score ``apply_to`` (default: the training rows) with training statistics.

    Returns ``(standardized, record)``; ``record.constant`` flags the
    zero-variance features that were left untouched.
    """
    rec = Standardizer.fit(train_vectors)
    target = train_vectors if apply_to is None else apply_to
    return rec.transform(target), rec


# --------------------------------------------------------------------------
# CSV

def format_float(v):
    return format(float(v), ".17g")


def table_to_csv(table: FeatureTable, id_column="swipe_id", extra_columns=()):
    """Serialize as ``user_id,device,<id_column>,<47 features>[,extra...]``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("user_id", "device", id_column) + FEATURE_NAMES + tuple(extra_columns))
    for i in range(len(table)):
        row = [table.users[i], table.device, str(int(table.ids[i]))]
        row.extend(format_float(v) for v in table.X[i])
        row.extend(str(table.extra[c][i]) for c in extra_columns)
        w.writerow(row)
    return buf.getvalue()


def write_table(table, path, id_column="swipe_id", extra_columns=()):
    Path(path).write_text(table_to_csv(table, id_column, extra_columns), encoding="utf-8")


def read_table(path, id_column=None) -> FeatureTable:
    """Read a feature CSV; the id column may be ``swipe_id`` or ``window_id``.

    Columns after the 47 features are kept in ``table.extra`` as strings.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty feature file", line=1) from None
        if id_column is None:
            id_column = header[2] if len(header) > 2 else "swipe_id"
        expected = ["user_id", "device", id_column, *FEATURE_NAMES]
        if header[: len(expected)] != expected:
            raise SchemaError(f"feature header mismatch; expected {','.join(expected[:4])},...", line=1)
        extra_names = header[len(expected):]
        users, ids, rows, devices = [], [], [], set()
        extra = {c: [] for c in extra_names}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
            try:
                vals = [float(v) for v in row[3: 3 + N_FEATURES]]
                ids.append(int(row[2]))
            except ValueError as exc:
                raise RowValueError(str(exc), lineno) from None
            users.append(row[0])
            devices.add(row[1])
            rows.append(vals)
            for j, c in enumerate(extra_names):
                extra[c].append(row[len(expected) + j])
    X = np.array(rows, dtype=float).reshape(-1, N_FEATURES)
    if not np.all(np.isfinite(X)):
        raise RowValueError("non-finite feature value", int(np.argwhere(~np.isfinite(X))[0, 0]) + 2)
    device = devices.pop() if len(devices) == 1 else ("phone" if not devices else "mixed")
    return FeatureTable(X, np.array(users, dtype=object), np.array(ids, dtype=np.int64), device,
                        {c: np.array(v, dtype=object) for c, v in extra.items()})
