import csv
import io
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from touchauth.errors import ConfigError, RowValueError, SchemaError
from touchauth.ingest import (EVENT_COLUMNS, Swipe, TouchEvent, build_dataset, dataset_to_csv, filter_taps,
                              parse_events, read_events_csv, read_swipes_csv, segment_swipes, synth_dataset,
                              write_events_csv, write_swipes_csv)
from tests.oracles.brute import filter_count, scan_segments, sort_and_group

HEADER = list(EVENT_COLUMNS)


def row(user="u1", device="phone", session="s1", action="move", t=0, x=1.0, y=2.0, a=3.0, b=4.0):
    return [user, device, session, action, str(t), str(x), str(y), str(a), str(b)]


def ev(action, t, x=0.0, y=0.0):
    return TouchEvent(float(x), float(y), t, 5.0, 4.0, action)


def stream(actions, start=0):
    return [ev(a, start + 10 * i, x=i, y=2 * i) for i, a in enumerate(actions)]


class TestParseEvents:
    def test_three_rows_one_group_ordered(self):
        rows = [HEADER, row(t=30, action="up"), row(t=10, action="down"), row(t=20)]
        groups = parse_events(rows)
        assert list(groups) == [("u1", "phone", "s1")]
        assert [e.t for e in groups[("u1", "phone", "s1")]] == [10, 20, 30]

    def test_bad_action_names_line(self):
        rows = [HEADER, row(action="down"), row(action="tap", t=5)]
        with pytest.raises(ValueError, match="line 3"):
            parse_events(rows)

    def test_non_numeric_field_names_line(self):
        with pytest.raises(RowValueError, match="line 2"):
            parse_events([HEADER, row(x="abc")])

    def test_non_integer_timestamp(self):
        with pytest.raises(RowValueError, match="line 2"):
            parse_events([HEADER, ["u1", "phone", "s1", "down", "1.5", "1", "2", "3", "4"]])

    def test_missing_column(self):
        with pytest.raises(SchemaError, match="line 1"):
            parse_events([HEADER[:-1], row()[:-1]])

    def test_extra_column(self):
        with pytest.raises(SchemaError):
            parse_events([HEADER + ["pressure"], row() + ["0.3"]])

    def test_negative_axis_rejected(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_events([HEADER, row(a=-1.0)])

    def test_column_map(self):
        renamed = ["uid" if c == "user_id" else c for c in HEADER]
        groups = parse_events([renamed, row(action="down")], column_map={"user_id": "uid"})
        assert ("u1", "phone", "s1") in groups

    def test_shuffled_rows_match_sort_and_group_oracle(self):
        rng = random.Random(3)
        records = []
        for user in ("u1", "u2"):
            for session in ("a", "b"):
                ts = rng.sample(range(100000), 250)
                for t in ts:
                    records.append({"user_id": user, "device": "phone", "session": session,
                                    "action": "move", "timestamp_ms": t, "x": rng.random(), "y": rng.random(),
                                    "touch_major": 1.0, "touch_minor": 1.0})
        rng.shuffle(records)
        assert len(records) == 1000
        rows = [HEADER] + [[str(r[c]) for c in HEADER] for r in records]
        got = {k: [e.t for e in v] for k, v in parse_events(rows).items()}
        assert got == sort_and_group(records)
        assert list(got) == sorted(got)


class TestSegment:
    def test_single_swipe(self):
        swipes, rep = segment_swipes(stream(["down", "move", "move", "up"]))
        assert [len(s) for s in swipes] == [4]
        assert rep.swipes == 1

    def test_two_swipes(self):
        # down,move,up is three events; down,up is two
        swipes, _ = segment_swipes(stream(["down", "move", "up", "down", "up"]))
        assert [len(s) for s in swipes] == [3, 2]

    def test_orphans_and_unterminated(self):
        swipes, rep = segment_swipes(stream(["move", "up", "down", "move", "up", "down", "move"]))
        assert len(swipes) == 1
        assert rep.orphans == 2
        assert rep.unterminated == 1

    def test_overlapping_down_dropped(self):
        swipes, rep = segment_swipes(stream(["down", "move", "down", "move", "up"]))
        assert [len(s) for s in swipes] == [4]
        assert rep.overlapping_downs == 1

    def test_duplicate_timestamp_dropped(self):
        evs = [ev("down", 0), ev("move", 10, 1), ev("move", 10, 2), ev("up", 20, 3)]
        swipes, rep = segment_swipes(evs)
        assert [e.t for e in swipes[0].events] == [0, 10, 20]
        assert rep.duplicate_timestamps == 1

    def test_duplicate_up_closes_on_previous_point(self):
        evs = [ev("down", 0), ev("move", 10, 1), ev("up", 10, 2)]
        swipes, _ = segment_swipes(evs)
        assert [e.action for e in swipes[0].events] == ["down", "up"]
        assert swipes[0].events[-1].x == 1.0

    def test_500_events_match_scan_oracle(self):
        rng = random.Random(9)
        actions = ["move"] * 500
        for i in rng.sample(range(500), 30):
            actions[i] = "down"
        for i in rng.sample([i for i in range(500) if actions[i] != "down"], 40):
            actions[i] = "up"
        swipes, rep = segment_swipes(stream(actions))
        counts, orphans = scan_segments(actions)
        assert [len(s) for s in swipes] == counts
        assert rep.orphans == orphans

    @given(st.lists(st.sampled_from(["down", "move", "up"]), max_size=80))
    def test_segments_match_oracle_property(self, actions):
        swipes, _ = segment_swipes(stream(actions))
        assert [len(s) for s in swipes] == scan_segments(actions)[0]
        for s in swipes:
            assert s.events[0].action == "down" and s.events[-1].action == "up"
            assert all(a.t < b.t for a, b in zip(s.events, s.events[1:]))


class TestSwipeInvariants:
    def test_must_start_down(self):
        with pytest.raises(ValueError):
            Swipe("u", "phone", "s", tuple(stream(["move", "up"])))

    def test_must_increase(self):
        with pytest.raises(ValueError):
            Swipe("u", "phone", "s", (ev("down", 5), ev("up", 5)))


class TestFilterTaps:
    def _swipes(self, lengths):
        return [Swipe("u", "phone", "s", tuple(stream(["down"] + ["move"] * (n - 2) + ["up"], 1000 * i)))
                for i, n in enumerate(lengths)]

    def test_all_long(self):
        kept, removed, frac = filter_taps(self._swipes([10] * 20))
        assert (len(kept), removed, frac) == (20, 0, 0.0)

    def test_mixed_lengths_match_count_oracle(self):
        rng = random.Random(4)
        lengths = [rng.randint(3, 12) for _ in range(1000)]
        kept, removed, frac = filter_taps(self._swipes(lengths), 6)
        assert (len(kept), removed) == filter_count(lengths, 6)
        assert frac == removed / 1000
        assert all(len(s) >= 6 for s in kept)

    def test_idempotent(self):
        kept, _, _ = filter_taps(self._swipes([3, 6, 9, 5]))
        assert filter_taps(kept)[1] == 0

    def test_bad_min_points(self):
        with pytest.raises(ConfigError):
            filter_taps([], 0)


class TestDataset:
    def test_synth_deterministic(self):
        a = dataset_to_csv(synth_dataset(2, 20, "phone", 7))
        b = dataset_to_csv(synth_dataset(2, 20, "phone", 7))
        assert a == b
        assert a != dataset_to_csv(synth_dataset(2, 20, "phone", 8))

    @pytest.mark.parametrize("kw", [{"n_users": 1}, {"swipes_per_user": 19}, {"device": "watch"}])
    def test_synth_rejects(self, kw):
        args = {"n_users": 2, "swipes_per_user": 20, "device": "phone", "seed": 0, **kw}
        with pytest.raises(ConfigError):
            synth_dataset(**args)

    def test_synth_contract(self):
        ds = synth_dataset(3, 30, "tablet", 2)
        assert ds.device == "tablet" and len(ds.users) == 3
        for swipes in ds.users.values():
            assert len(swipes) == 30
            assert all(6 <= len(s) <= 60 for s in swipes)
            assert [s.swipe_id for s in swipes] == list(range(30))

    def test_round_trip_is_idempotent(self, tmp_path):
        ds = synth_dataset(2, 20, "phone", 5)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_events_csv(ds, p1)
        ds2, rep = build_dataset(read_events_csv(p1), min_points=6)
        write_events_csv(ds2, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert rep["removed_taps"] == 0

    def test_swipe_csv_has_dense_ids(self, tmp_path):
        ds = synth_dataset(2, 20, "phone", 5)
        p = tmp_path / "s.csv"
        write_swipes_csv(ds, p)
        header = next(csv.reader(io.StringIO(p.read_text())))
        assert header[-1] == "swipe_id"
        back = read_swipes_csv(p)
        assert {u: [s.swipe_id for s in v] for u, v in back.users.items()} == \
            {u: list(range(20)) for u in ds.users}

    def test_mixed_devices_need_filter(self):
        rows = [HEADER, row(device="phone", action="down"), row(device="tablet", user="u2", action="down")]
        with pytest.raises(ConfigError):
            build_dataset(parse_events(rows))
