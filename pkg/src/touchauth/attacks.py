"""Zero-effort and population attack sets."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptySource, MissingDataset
from .features import N_FEATURES, FeatureTable, table_to_csv

log = logging.getLogger(__name__)

SCENARIOS = ("zero_effort", "population_same", "population_different")


@dataclass(frozen=True)
class PopulationAttackConfig:
    n: int = 1000
    spread: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("attack.n must be >= 1")
        if not self.spread > 0:
            raise ConfigError("attack.spread must be > 0")


@dataclass
class AttackSet:
    scenario: str
    vectors: np.ndarray
    source: str
    config: dict = field(default_factory=dict)
    users: np.ndarray | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        self.vectors = np.asarray(self.vectors, dtype=float).reshape(-1, N_FEATURES)

    def __len__(self):
        return len(self.vectors)

    def to_csv(self, device="phone"):
        n = len(self)
        users = self.users if self.users is not None else np.array(["population"] * n, dtype=object)
        table = FeatureTable(self.vectors, users, np.arange(n), device,
                             {"scenario": [self.scenario] * n, "source": [self.source] * n})
        return table_to_csv(table, "window_id", ("scenario", "source"))


def population_stats(X):
    """Per-column mean and (population) standard deviation."""
    X = np.asarray(X, dtype=float)
    mu, sd = X.mean(axis=0), X.std(axis=0)
    # summation noise would otherwise leave a tiny sigma on constant columns
    const = np.all(X == X[:1], axis=0)
    mu[const] = X[0, const]
    sd[const] = 0.0
    return mu, sd


def population_attack(X, n=None, cfg: PopulationAttackConfig = PopulationAttackConfig()):
    """Draw ``n`` vectors ``mu + r * sigma`` with ``r ~ Normal(0, spread)`` per cell."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise EmptySource("population attack needs a non-empty source matrix")
    n = cfg.n if n is None else n
    if n < 1:
        raise ConfigError("attack.n must be >= 1")
    mu, sigma = population_stats(X)
    r = np.random.default_rng(cfg.seed).normal(0.0, cfg.spread, size=(n, X.shape[1]))
    return mu + r * sigma


def zero_effort_set(test_windows: FeatureTable, genuine_user) -> AttackSet:
    """All test windows of users other than ``genuine_user``."""
    if genuine_user not in set(test_windows.users.tolist()):
        log.warning("target user %r absent from the test partition", genuine_user)
        return AttackSet("zero_effort", np.empty((0, N_FEATURES)), "primary",
                         {"genuine_user": genuine_user}, np.empty(0, dtype=object))
    mask = test_windows.users != genuine_user
    return AttackSet("zero_effort", test_windows.X[mask], "primary",
                     {"genuine_user": genuine_user}, test_windows.users[mask])


def build_attack_set(scenario, primary: FeatureTable, attack: FeatureTable | None = None,
                     cfg: PopulationAttackConfig = PopulationAttackConfig(), genuine_user=None,
                     primary_id="primary", attack_id="attack"):
    """Dispatch on scenario.

    ``primary`` is the zero-effort source (the test partition's windows) for
    ``zero_effort`` and the population source (every window of the primary
    dataset) for ``population_same``.
    """
    if scenario == "zero_effort":
        if genuine_user is None:
            raise ConfigError("zero_effort attack needs a genuine user")
        out = zero_effort_set(primary, genuine_user)
        out.source = primary_id
        return out
    snap = {"n": cfg.n, "spread": cfg.spread, "seed": cfg.seed}
    if scenario == "population_same":
        return AttackSet(scenario, population_attack(primary.X, cfg.n, cfg), primary_id, snap)
    if scenario == "population_different":
        if attack is None:
            raise MissingDataset("population_different needs a separate attack dataset")
        return AttackSet(scenario, population_attack(attack.X, cfg.n, cfg), attack_id, snap)
    raise ConfigError(f"unknown scenario {scenario!r}")
