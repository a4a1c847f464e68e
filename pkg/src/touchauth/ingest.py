"""Raw touch-event parsing, swipe segmentation, tap filtering and synthetic data.

The canonical raw-event CSV is::

    user_id,device,session,action,timestamp_ms,x,y,touch_major,touch_minor

Segmented swipe files carry an extra trailing ``swipe_id`` column.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, RowValueError, SchemaError
from .seeding import rng

log = logging.getLogger(__name__)

EVENT_COLUMNS = (
    "user_id", "device", "session", "action", "timestamp_ms",
    "x", "y", "touch_major", "touch_minor",
)
SWIPE_COLUMNS = EVENT_COLUMNS + ("swipe_id",)
ACTIONS = ("down", "move", "up")
DEVICES = ("phone", "tablet")


class TouchEvent(NamedTuple):
    x: float
    y: float
    t: int
    a: float
    b: float
    action: str


@dataclass(frozen=True)
class Swipe:
    """One finger-down .. finger-up sequence."""

    user: str
    device: str
    session: str
    events: tuple[TouchEvent, ...]
    swipe_id: int = -1

    def __post_init__(self):
        ev = self.events
        if len(ev) < 2:
            raise ValueError("a swipe needs at least a down and an up event")
        if ev[0].action != "down" or ev[-1].action != "up":
            raise ValueError("a swipe must start with 'down' and end with 'up'")
        for prev, cur in zip(ev, ev[1:]):
            if not cur.t > prev.t:
                raise ValueError(f"timestamps not strictly increasing at t={cur.t}")
        for e in ev:
            if e.a < 0 or e.b < 0:
                raise ValueError("fingertip axes must be non-negative")

    def __len__(self):
        return len(self.events)

    @property
    def start_time(self):
        return self.events[0].t

    def to_array(self):
        """Return an ``(n, 5)`` float array of ``x, y, t, a, b``."""
        return np.array([e[:5] for e in self.events], dtype=float)


@dataclass
class Dataset:
    device: str
    users: dict[str, list[Swipe]] = field(default_factory=dict)
    name: str = "dataset"

    def n_swipes(self):
        return sum(len(s) for s in self.users.values())


@dataclass
class SegmentReport:
    swipes: int = 0
    orphans: int = 0
    duplicate_timestamps: int = 0
    overlapping_downs: int = 0
    unterminated: int = 0

    def merge(self, other):
        for k in vars(self):
            setattr(self, k, getattr(self, k) + getattr(other, k))
        return self


# --------------------------------------------------------------------------
# parsing

def _header_index(header, column_map):
    header = [h.strip() for h in header]
    if column_map:
        inverse = {src: canon for canon, src in column_map.items()}
        header = [inverse.get(h, h) for h in header]
    missing = [c for c in EVENT_COLUMNS if c not in header]
    extra = [c for c in header if c not in EVENT_COLUMNS and c != "swipe_id"]
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing columns {missing}")
        if extra:
            parts.append(f"unexpected columns {extra}")
        raise SchemaError("; ".join(parts), line=1)
    return {c: header.index(c) for c in header}


def _num(value, name, line, kind=float):
    try:
        v = kind(value)
    except (TypeError, ValueError):
        raise RowValueError(f"{name}={value!r} is not {'an integer' if kind is int else 'numeric'}", line) from None
    if kind is float and not math.isfinite(v):
        raise RowValueError(f"{name}={value!r} is not finite", line)
    return v


def parse_events(rows: Iterable[Sequence[str]], column_map: Mapping[str, str] | None = None):
    """Parse canonical CSV records into time-ordered event groups.

    Parameters
    ----------
    rows : iterable of str sequences
        CSV records, the first one being the header.
    column_map : mapping, optional
        ``{canonical_name: source_name}`` for datasets whose headers differ.

    Returns
    -------
    dict
        ``{(user, device, session): [TouchEvent, ...]}`` with keys sorted and
        events stably ordered by timestamp.
    """
    it = iter(rows)
    try:
        header = next(it)
    except StopIteration:
        raise SchemaError("empty input, header required", line=1) from None
    idx = _header_index(header, column_map)
    width = len(header)
    groups = defaultdict(list)
    for lineno, row in enumerate(it, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != width:
            raise SchemaError(f"expected {width} fields, got {len(row)}", line=lineno)
        action = row[idx["action"]].strip()
        if action not in ACTIONS:
            raise RowValueError(f"action={action!r} not one of {ACTIONS}", lineno)
        device = row[idx["device"]].strip()
        if device not in DEVICES:
            raise RowValueError(f"device={device!r} not one of {DEVICES}", lineno)
        t = _num(row[idx["timestamp_ms"]].strip(), "timestamp_ms", lineno, int)
        x = _num(row[idx["x"]], "x", lineno)
        y = _num(row[idx["y"]], "y", lineno)
        a = _num(row[idx["touch_major"]], "touch_major", lineno)
        b = _num(row[idx["touch_minor"]], "touch_minor", lineno)
        if a < 0 or b < 0:
            raise RowValueError("touch axes must be non-negative", lineno)
        key = (row[idx["user_id"]].strip(), device, row[idx["session"]].strip())
        groups[key].append(TouchEvent(x, y, t, a, b, action))
    return {k: sorted(groups[k], key=lambda e: e.t) for k in sorted(groups)}


def read_events_csv(path, column_map=None):
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_events(csv.reader(fh), column_map)


# --------------------------------------------------------------------------
# segmentation

def segment_swipes(events: Sequence[TouchEvent], user="", device="phone", session=""):
    """Cut a time-ordered event stream into down..up swipes.

    Events outside an open swipe other than ``down`` are orphans. A second
    ``down`` while a swipe is open (multi-touch) is dropped. An event whose
    timestamp repeats the previous one inside a swipe is dropped. A trailing
    swipe that never sees ``up`` is discarded. All discards are counted.

    Returns
    -------
    (list of Swipe, SegmentReport)
    """
    report = SegmentReport()
    swipes = []
    current = None
    for ev in events:
        if current is None:
            if ev.action == "down":
                current = [ev]
            else:
                report.orphans += 1
            continue
        if ev.action == "down":
            report.overlapping_downs += 1
            continue
        if ev.t <= current[-1].t:
            report.duplicate_timestamps += 1
            if ev.action != "up":
                continue
            if len(current) < 2:
                report.unterminated += 1
                current = None
                continue
            # the dropped event was the finger-up: the previous point closes the swipe
            ev = current.pop()._replace(action="up")
        current.append(ev)
        if ev.action == "up":
            swipes.append(Swipe(user, device, session, tuple(current)))
            current = None
    if current is not None:
        report.unterminated += 1
    report.swipes = len(swipes)
    return swipes, report


def filter_taps(swipes: Sequence[Swipe], min_points: int = 6):
    """Drop swipes with fewer than ``min_points`` events.

    Returns
    -------
    kept : list of Swipe
    removed_count : int
    removed_fraction : float
    """
    if min_points < 1:
        raise ConfigError("min_points must be >= 1")
    kept = [s for s in swipes if len(s) >= min_points]
    removed = len(swipes) - len(kept)
    frac = removed / len(swipes) if swipes else 0.0
    return kept, removed, frac


def build_dataset(groups, device=None, min_points=6, name="dataset"):
    """Segment and filter grouped events into a :class:`Dataset`.

    Swipe ids are dense per user in time order across sessions.
    Returns ``(dataset, report)`` where ``report`` is a plain dict of counts.
    """
    seg = SegmentReport()
    per_user = defaultdict(list)
    devices = set()
    for (user, dev, session), events in groups.items():
        if device is not None and dev != device:
            continue
        devices.add(dev)
        sw, rep = segment_swipes(events, user, dev, session)
        seg.merge(rep)
        per_user[user].extend(sw)
    all_swipes = [s for v in per_user.values() for s in v]
    _, removed, frac = filter_taps(all_swipes, min_points)
    if device is None:
        if len(devices) > 1:
            raise ConfigError(f"events mix devices {sorted(devices)}; pick one with a device filter")
        device = devices.pop() if devices else "phone"
    users = {}
    for user in sorted(per_user):
        kept = [s for s in per_user[user] if len(s) >= min_points]
        kept.sort(key=lambda s: (s.start_time, s.session))
        users[user] = [Swipe(s.user, s.device, s.session, s.events, i) for i, s in enumerate(kept)]
    report = dict(vars(seg), total_swipes=len(all_swipes), removed_taps=removed,
                  removed_fraction=frac, min_points=min_points)
    return Dataset(device, users, name), report


def read_swipes_csv(path, device=None, min_points=1, name=None):
    """Load a segmented-swipe CSV written by :func:`write_swipes_csv`."""
    groups = read_events_csv(path)
    ds, _ = build_dataset(groups, device=device, min_points=min_points,
                          name=name or Path(path).stem)
    return ds


def _fmt(v):
    return repr(float(v))


def _event_rows(dataset, with_id):
    for user, swipes in dataset.users.items():
        for s in swipes:
            for e in s.events:
                row = [user, s.device, s.session, e.action, str(e.t),
                       _fmt(e.x), _fmt(e.y), _fmt(e.a), _fmt(e.b)]
                if with_id:
                    row.append(str(s.swipe_id))
                yield row


def dataset_to_csv(dataset: Dataset, with_swipe_id=False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWIPE_COLUMNS if with_swipe_id else EVENT_COLUMNS)
    w.writerows(_event_rows(dataset, with_swipe_id))
    return buf.getvalue()


def write_events_csv(dataset, path):
    Path(path).write_text(dataset_to_csv(dataset, False), encoding="utf-8")


def write_swipes_csv(dataset, path):
    Path(path).write_text(dataset_to_csv(dataset, True), encoding="utf-8")


# --------------------------------------------------------------------------
# synthetic data

def _user_style(g, device):
    scale = 1.0 if device == "phone" else 1.6
    return {
        "duration": g.lognormal(math.log(220), 0.35),          # ms
        "speed": g.lognormal(math.log(1.1), 0.45) * scale,     # px/ms
        "curvature": g.normal(0.0, 0.18),                      # bend / chord length
        "skew": g.uniform(0.6, 1.8),                           # velocity profile shape
        "major": g.uniform(6.0, 16.0),                         # px
        "ratio": g.uniform(0.55, 0.95),
        "dt": g.uniform(7.0, 13.0),                             # sampling interval, ms
        "direction_bias": g.normal(0.0, 0.25),                 # rad
        "start": (g.uniform(0.25, 0.75), g.uniform(0.3, 0.7)),
        "vertical": g.uniform(0.2, 0.8),                       # share of vertical swipes
    }


def _synth_swipe(g, style, device, t0):
    width, height = (1080.0, 1920.0) if device == "phone" else (1600.0, 2560.0)
    duration = style["duration"] * g.lognormal(0.0, 0.18)
    dt = style["dt"]
    n = int(np.clip(round(duration / dt) + 1, 6, 60))
    if g.random() < style["vertical"]:
        base = math.pi / 2 if g.random() < 0.5 else -math.pi / 2
    else:
        base = 0.0 if g.random() < 0.5 else math.pi
    angle = base + style["direction_bias"] + g.normal(0.0, 0.08)
    length = style["speed"] * duration * g.lognormal(0.0, 0.15)
    sx = (style["start"][0] + g.normal(0.0, 0.05)) * width
    sy = (style["start"][1] + g.normal(0.0, 0.05)) * height
    ex, ey = sx + length * math.cos(angle), sy + length * math.sin(angle)
    bend = (style["curvature"] + g.normal(0.0, 0.04)) * length
    mx, my = (sx + ex) / 2 - bend * math.sin(angle), (sy + ey) / 2 + bend * math.cos(angle)
    steps = np.maximum(1, np.round(dt * g.lognormal(0.0, 0.12, size=n - 1))).astype(np.int64)
    t = t0 + np.concatenate(([0], np.cumsum(steps)))
    tau = (t - t[0]) / (t[-1] - t[0])
    k = style["skew"]
    s = tau**k / (tau**k + (1 - tau) ** k)
    x = (1 - s) ** 2 * sx + 2 * (1 - s) * s * mx + s**2 * ex + g.normal(0.0, 0.6, n)
    y = (1 - s) ** 2 * sy + 2 * (1 - s) * s * my + s**2 * ey + g.normal(0.0, 0.6, n)
    a = np.abs(style["major"] * g.lognormal(0.0, 0.08, n))
    b = np.abs(a * style["ratio"] * g.lognormal(0.0, 0.05, n))
    x, y, a, b = (np.round(v, 3) for v in (x, y, a, b))
    actions = ["down"] + ["move"] * (n - 2) + ["up"]
    return tuple(TouchEvent(float(x[i]), float(y[i]), int(t[i]), float(a[i]), float(b[i]), actions[i])
                 for i in range(n))


def synth_dataset(n_users: int, swipes_per_user: int, device: str = "phone", seed: int = 0,
                  n_sessions: int = 2, name=None) -> Dataset:
    """Generate a seeded dataset whose users have distinct swiping styles.

    Each user draws a latent style (duration, speed, curvature, velocity
    profile, fingertip size, sampling interval, direction habits) from a
    master distribution; individual swipes jitter around it.
    """
    if n_users < 2:
        raise ConfigError("synth: n_users must be >= 2 (impostor sampling needs another user)")
    if swipes_per_user < 20:
        raise ConfigError("synth: swipes_per_user must be >= 20")
    if device not in DEVICES:
        raise ConfigError(f"synth: device must be one of {DEVICES}")
    width = max(2, len(str(n_users - 1)))
    users = {}
    for k in range(n_users):
        uid = f"u{k:0{width}d}"
        g = rng(seed, "synth", device, uid)
        style = _user_style(g, device)
        swipes = []
        t0 = int(g.integers(1_000_000, 2_000_000))
        for i in range(swipes_per_user):
            session = f"s{1 + i * n_sessions // swipes_per_user}"
            events = _synth_swipe(g, style, device, t0)
            swipes.append(Swipe(uid, device, session, events, i))
            t0 = events[-1].t + int(g.integers(400, 3000))
        users[uid] = swipes
    return Dataset(device, users, name or f"synth-{device}-{seed}")
