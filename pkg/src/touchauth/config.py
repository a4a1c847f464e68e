"""Run configuration: one JSON document drives every stage.

Unknown keys and out-of-range values raise :class:`ConfigError` naming the
offending key. Sub-seeds are derived from the master seed, a stage label and
the user id (see :func:`touchauth.seeding.derive_seed`).
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .attacks import SCENARIOS
from .errors import ConfigError
from .learners import ALGORITHMS, DEFAULT_GRIDS

DEFAULTS = {
    "seed": None,
    "device": None,
    "output_dir": "out",
    "jobs": None,
    "min_points": 6,
    "window": {"p": 5, "q": 1},
    "split": {"train_fraction": 0.6, "ordering": "chronological"},
    "balance": {"per_impostor": 4, "K": 5, "beta": 1.0},
    "attack": {"n": 1000, "spread": 3.0},
    "scenarios": ["zero_effort", "population_same", "population_different"],
    "learners": {"algorithms": list(ALGORITHMS), "folds": 5, "grids": {}},
    "gan": {"n_samples": 250, "epochs": 300, "min_epochs": 50, "patience": 5,
            "batch_size": 32, "learning_rate": 2e-4, "noise_dim": 32,
            "generator_widths": [64, 64], "discriminator_widths": [64, 32],
            "quality_band": [0.40, 0.60], "holdout_fraction": 0.2},
    "modes": ["vanilla", "gan"],
    "save_models": True,
}


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict) and key != "grids":
            if not isinstance(val, dict):
                raise ConfigError(f"config key '{where}' must be an object")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclass
class RunConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self):
        return self.data["seed"]

    @classmethod
    def from_dict(cls, d, require_seed=True):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        cfg = cls(_merge(DEFAULTS, d))
        cfg.validate(require_seed)
        return cfg

    @classmethod
    def load(cls, path, require_seed=True):
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file '{path}' not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file '{path}': {exc}") from None
        return cls.from_dict(d, require_seed)

    def override(self, d, require_seed=True):
        """Apply flag values (``None`` entries are ignored)."""
        clean = _drop_none(d)
        out = RunConfig(_merge(self.data, clean))
        out.validate(require_seed)
        return out

    def validate(self, require_seed=True):
        d = self.data
        if d["seed"] is None:
            if require_seed:
                raise ConfigError("'seed' is required (master seed)")
        elif not isinstance(d["seed"], int) or isinstance(d["seed"], bool):
            raise ConfigError("'seed' must be an integer")
        if d["device"] not in (None, "phone", "tablet"):
            raise ConfigError("'device' must be 'phone' or 'tablet'")
        w = d["window"]
        if not (isinstance(w["p"], int) and w["p"] >= 1):
            raise ConfigError("'window.p' must be an integer >= 1")
        if not (isinstance(w["q"], int) and 1 <= w["q"] <= w["p"]):
            raise ConfigError("'window.q' must satisfy 1 <= q <= p")
        s = d["split"]
        if not 0 < s["train_fraction"] < 1:
            raise ConfigError("'split.train_fraction' must lie in (0, 1)")
        if s["ordering"] not in ("chronological", "seeded_random"):
            raise ConfigError("'split.ordering' must be 'chronological' or 'seeded_random'")
        b = d["balance"]
        if b["per_impostor"] < 1 or b["K"] < 1 or not 0 <= b["beta"] <= 1:
            raise ConfigError("'balance' needs per_impostor >= 1, K >= 1, 0 <= beta <= 1")
        a = d["attack"]
        if a["n"] < 1 or not a["spread"] > 0:
            raise ConfigError("'attack' needs n >= 1 and spread > 0")
        for sc in d["scenarios"]:
            if sc not in SCENARIOS:
                raise ConfigError(f"'scenarios' entry {sc!r} not one of {SCENARIOS}")
        lr = d["learners"]
        for algo in lr["algorithms"]:
            if algo not in ALGORITHMS:
                raise ConfigError(f"'learners.algorithms' entry {algo!r} not one of {ALGORITHMS}")
        for algo, grid in lr["grids"].items():
            if algo not in ALGORITHMS:
                raise ConfigError(f"'learners.grids.{algo}' is not a known algorithm")
            if not grid:
                raise ConfigError(f"'learners.grids.{algo}' is empty")
        if lr["folds"] < 2:
            raise ConfigError("'learners.folds' must be >= 2")
        for m in d["modes"]:
            if m not in ("vanilla", "gan"):
                raise ConfigError(f"'modes' entry {m!r} not 'vanilla' or 'gan'")
        if d["jobs"] is not None and d["jobs"] < 1:
            raise ConfigError("'jobs' must be >= 1")
        if d["min_points"] < 1:
            raise ConfigError("'min_points' must be >= 1")
        if d["gan"]["n_samples"] < 0:
            raise ConfigError("'gan.n_samples' must be >= 0")

    def grid(self, algo):
        return self.data["learners"]["grids"].get(algo, DEFAULT_GRIDS[algo])

    def to_json(self):
        return json.dumps(self.data, sort_keys=True, indent=2)


def _drop_none(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            v = _drop_none(v)
            if v:
                out[k] = v
        elif v is not None:
            out[k] = v
    return out
