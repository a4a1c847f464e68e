import json
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from touchauth.features import extract_table
from touchauth.ingest import synth_dataset

DATA = Path(__file__).resolve().parent / "data"

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def frozen():
    return json.loads((DATA / "frozen_oracles.json").read_text())


@pytest.fixture(scope="session")
def small_dataset():
    return synth_dataset(4, 40, "phone", 11)


@pytest.fixture(scope="session")
def small_table(small_dataset):
    return extract_table(small_dataset)


def fd_max_rel_error(loss, params, n_probes=10, h=1e-5, seed=0, floor=1e-8):
    """Largest relative error between analytic and central-difference gradients.

    ``loss(params) -> (value, grads)``; probes are random single entries
    across all parameter arrays. The denominator is floored at ``floor``.
    """
    _, grads = loss(params)
    g = np.random.default_rng(seed)
    sizes = np.array([p.size for p in params])
    worst = 0.0
    for _ in range(n_probes):
        k = int(g.choice(len(params), p=sizes / sizes.sum()))
        idx = np.unravel_index(int(g.integers(params[k].size)), params[k].shape)
        old = params[k][idx]
        params[k][idx] = old + h
        up = loss(params)[0]
        params[k][idx] = old - h
        down = loss(params)[0]
        params[k][idx] = old
        num = (up - down) / (2 * h)
        ana = grads[k][idx]
        worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), floor))
    return worst


def tiny_config(seed=5, **extra):
    """A run small enough for unit tests: light grids, short GAN training."""
    from touchauth.config import RunConfig

    d = {
        "seed": seed,
        "jobs": 1,
        "attack": {"n": 200},
        "scenarios": ["zero_effort", "population_same"],
        "learners": {"folds": 3, "grids": {
            "svm": [{"C": 1.0, "kernel": "rbf", "gamma": 0.1}],
            "random_forest": {"n_trees": [10, 20], "max_depth": [6]},
            "mlp": [{"hidden": [16], "lr": 1e-2, "epochs": 40}],
            "gbt": {"n_trees": [10], "max_depth": [3]},
        }},
        "gan": {"n_samples": 20, "epochs": 15, "min_epochs": 5, "batch_size": 8},
    }
    d.update(extra)
    return RunConfig.from_dict(d)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
