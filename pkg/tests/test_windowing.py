import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from touchauth.errors import ConfigError
from touchauth.features import FeatureTable
from touchauth.windowing import WindowConfig, window_table, windows
from tests.oracles.brute import window_members


def test_seven_swipes_three_windows():
    X = np.arange(7 * 3, dtype=float).reshape(7, 3)
    agg, members = windows(X, WindowConfig(5, 1))
    assert members.tolist() == [[0, 1, 2, 3, 4], [1, 2, 3, 4, 5], [2, 3, 4, 5, 6]]
    np.testing.assert_array_equal(agg[0], X[:5].mean(axis=0))


def test_single_window_is_mean():
    X = np.random.default_rng(0).normal(size=(5, 47))
    agg, _ = windows(X, WindowConfig(5, 1))
    assert agg.shape == (1, 47)
    for j in range(47):
        assert agg[0, j] == np.mean(X[:, j])


def test_fewer_than_p_gives_empty(caplog):
    agg, members = windows(np.zeros((4, 47)), WindowConfig(5, 1))
    assert agg.shape == (0, 47) and members.shape == (0, 5)
    assert "fewer than window size" in caplog.text


def test_members_match_index_oracle():
    X = np.random.default_rng(1).normal(size=(100, 47))
    _, members = windows(X, WindowConfig(5, 2))
    assert members.tolist() == window_members(100, 5, 2)


@pytest.mark.parametrize("p,q", [(0, 1), (5, 0), (3, 4)])
def test_bad_config(p, q):
    with pytest.raises(ConfigError):
        WindowConfig(p, q)


@given(st.integers(0, 60), st.integers(1, 8), st.data())
def test_count_and_overlap(n, p, data):
    q = data.draw(st.integers(1, p))
    agg, members = windows(np.zeros((n, 2)), WindowConfig(p, q))
    expected = (n - p) // q + 1 if n >= p else 0
    assert len(agg) == expected
    for a, b in zip(members, members[1:]):
        assert len(set(a) & set(b)) == p - q


@given(arrays(float, 4, elements=st.floats(-1e6, 1e6, allow_subnormal=False)), st.integers(1, 6))
def test_identical_members_reproduce_exactly(row, p):
    X = np.tile(row, (p + 3, 1))
    agg, _ = windows(X, WindowConfig(p, 1))
    assert np.array_equal(agg, np.tile(row, (len(agg), 1)))


def test_window_table_orders_by_swipe_id():
    X = np.arange(12, dtype=float).reshape(6, 2)
    t = FeatureTable(X, np.array(["a"] * 6, dtype=object), np.array([5, 0, 1, 2, 3, 4]))
    w = window_table(t, WindowConfig(5, 1))
    assert w.ids.tolist() == [0, 1]
    assert w.extra["members"].tolist() == ["0;1;2;3;4", "1;2;3;4;5"]
    np.testing.assert_array_equal(w.X[0], X[1:6].mean(axis=0))
