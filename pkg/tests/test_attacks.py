import csv
import io
from collections import Counter

import numpy as np
import pytest

from touchauth.attacks import (AttackSet, PopulationAttackConfig, build_attack_set, population_attack,
                               population_stats, zero_effort_set)
from touchauth.errors import ConfigError, EmptySource, MissingDataset
from touchauth.features import FEATURE_NAMES, FeatureTable
from tests.oracles.brute import column_stats


def table(n_users=3, per_user=10, seed=0):
    g = np.random.default_rng(seed)
    users = np.array([f"u{i + 1}" for i in range(n_users) for _ in range(per_user)], dtype=object)
    ids = np.array([j for _ in range(n_users) for j in range(per_user)])
    return FeatureTable(g.normal(size=(n_users * per_user, 47)), users, ids)


class TestPopulation:
    def test_zero_variance_reproduces_mu(self):
        X = np.tile(np.linspace(-3, 3, 47), (20, 1))
        out = population_attack(X, 50, PopulationAttackConfig(seed=1))
        mu, sd = population_stats(X)
        assert np.all(sd == 0)
        assert np.array_equal(out, np.tile(mu, (50, 1)))
        assert np.array_equal(out[0], X[0])

    def test_large_sample_statistics(self):
        g = np.random.default_rng(0)
        X = g.normal(g.uniform(-50, 50, 47), g.uniform(0.1, 20, 47), (400, 47))
        X[:, 5] = 3.25
        mu, sd = (np.array(v) for v in column_stats(X.tolist()))
        spread = 3.0
        out = population_attack(X, 10_000, PopulationAttackConfig(10_000, spread, seed=42))
        assert np.all(np.abs(out.mean(axis=0) - mu) <= 0.15 * spread * sd)
        live = sd > 0
        assert np.all(np.abs(out.std(axis=0)[live] - spread * sd[live]) <= 0.05 * spread * sd[live])
        assert np.all(out[:, 5] == 3.25)

    def test_deterministic(self):
        X = table().X
        cfg = PopulationAttackConfig(5, 3.0, 42)
        assert np.array_equal(population_attack(X, 5, cfg), population_attack(X, 5, cfg))

    def test_stats_match_column_oracle(self):
        X = table(seed=4).X
        mu, sd = population_stats(X)
        mu_o, sd_o = column_stats(X.tolist())
        np.testing.assert_allclose(mu, mu_o, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(sd, sd_o, rtol=1e-12)

    def test_empty_source(self):
        with pytest.raises(EmptySource):
            population_attack(np.empty((0, 47)), 3)

    @pytest.mark.parametrize("kw", [{"n": 0}, {"spread": 0.0}])
    def test_bad_config(self, kw):
        with pytest.raises(ConfigError):
            PopulationAttackConfig(**kw)


class TestZeroEffort:
    def test_counts(self):
        assert len(zero_effort_set(table(), "u1")) == 20

    def test_absent_user_warns(self, caplog):
        out = zero_effort_set(table(), "nobody")
        assert len(out) == 0 and "absent" in caplog.text

    def test_multiset_matches_filter_oracle(self):
        t = table(4, 7, seed=2)
        got = Counter(tuple(r) for r in zero_effort_set(t, "u3").vectors.tolist())
        want = Counter(tuple(t.X[i].tolist()) for i in range(len(t)) if t.users[i] != "u3")
        assert got == want


class TestBuild:
    def test_population_same_source(self):
        out = build_attack_set("population_same", table(), cfg=PopulationAttackConfig(10, 3.0, 0),
                               primary_id="phone-primary")
        assert out.source == "phone-primary" and len(out) == 10

    def test_population_same_uses_all_windows(self):
        t = table(seed=5)
        out = build_attack_set("population_same", t, cfg=PopulationAttackConfig(4, 3.0, 7))
        mu, sd = population_stats(t.X)
        r = np.random.default_rng(7).normal(0, 3.0, (4, 47))
        np.testing.assert_array_equal(out.vectors, mu + r * sd)

    def test_population_different_needs_dataset(self):
        with pytest.raises(MissingDataset):
            build_attack_set("population_different", table())

    def test_population_different_uses_attack_stats(self):
        prim, att = table(seed=1), table(seed=2)
        att.X += 100
        out = build_attack_set("population_different", prim, att, PopulationAttackConfig(2000, 1.0, 3),
                               attack_id="tablet")
        assert out.source == "tablet"
        assert abs(out.vectors.mean() - 100) < 1

    def test_zero_effort_needs_user(self):
        with pytest.raises(ConfigError):
            build_attack_set("zero_effort", table())

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError):
            AttackSet("replay", np.zeros((1, 47)), "x")

    def test_csv_columns(self):
        out = build_attack_set("population_same", table(), cfg=PopulationAttackConfig(3, 3.0, 0))
        rows = list(csv.reader(io.StringIO(out.to_csv())))
        assert rows[0] == ["user_id", "device", "window_id", *FEATURE_NAMES, "scenario", "source"]
        assert len(rows) == 4 and rows[1][-2:] == ["population_same", "primary"]
