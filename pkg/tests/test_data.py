import json

import numpy as np
import pytest

from platformrr.data import CoarseningMap, Dataset, TrialDesign, load_dataset, validate
from platformrr.errors import DataError

from conftest import make_dataset, make_design

CSV_HEADER = "id,x,delta,arm,window,z\n"


def small_design():
    return TrialDesign(
        k=1, q=3, tau=10.0,
        window_sets={1: frozenset({1, 2, 3})},
        calendar_bounds=((0.0, 1.0), (1.0, 2.0), (2.0, 3.0)),
    )


def test_load_empty_csv():
    ds = load_dataset(CSV_HEADER, small_design().to_json())
    assert ds.n == 0


def test_load_single_row_fields():
    cm = CoarseningMap({"z2": "v1"})
    ds = load_dataset(CSV_HEADER + "1,2.5,1,0,3,z2\n", small_design().to_json(), cm.to_json())
    (rec,) = list(ds.records())
    assert (rec.x, rec.delta, rec.arm, rec.window, rec.z, rec.v) == (2.5, 1, 0, 3, "z2", "v1")
    assert rec.id == "1"


def test_load_negative_time_reports_line():
    body = "1,2.5,1,0,1,z1\n" * 6 + "7,-1,1,0,1,z1\n"
    with pytest.raises(DataError, match="negative observed time, line 8"):
        load_dataset(CSV_HEADER + body, small_design().to_json())


@pytest.mark.parametrize(
    "row, match",
    [
        ("1,abc,1,0,1,z1", "line 2"),
        ("1,1.0,2,0,1,z1", "event indicator must be 0 or 1, line 2"),
        ("1,1.0,1,5,1,z1", "unknown arm label 5, line 2"),
        ("1,1.0,1,0,9,z1", "unknown window label 9, line 2"),
        ("1,1.0,1,0,1", "expected 6 fields"),
    ],
)
def test_load_malformed_rows(row, match):
    with pytest.raises(DataError, match=match):
        load_dataset(CSV_HEADER + row + "\n", small_design().to_json())


def test_load_unknown_z_with_explicit_coarsening():
    cm = CoarseningMap({"z1": "all"})
    with pytest.raises(DataError, match="unknown covariate label 'zX', line 2"):
        load_dataset(CSV_HEADER + "1,1.0,1,0,1,zX\n", small_design().to_json(), cm.to_json())


def test_load_bad_header():
    with pytest.raises(DataError, match="header"):
        load_dataset("id,x,delta\n", small_design().to_json())


def test_csv_round_trip_preserves_records():
    rows = [(1.5, 1, 0, 1, "a"), (2.0, 0, 1, 2, "b"), (0.25, 1, 1, 3, "a"), (9.0, 0, 0, 2, "b")]
    ds = make_dataset(rows, design=small_design())
    back = load_dataset(ds.to_csv(), ds.design.to_json(), ds.coarsening.to_json())
    assert list(back.records()) == list(ds.records())


def test_v_recomputable_from_z():
    cm = CoarseningMap({"a": "lo", "b": "lo", "c": "hi"})
    rows = [(1.0, 0, 0, 1, z) for z in ("a", "b", "c", "a")]
    ds = make_dataset(rows, design=small_design(), coarsening=cm)
    for rec in ds.records():
        assert rec.v == cm(rec.z)


def test_coarsening_identity_and_constant():
    ident = CoarseningMap.identity(["x", "y"])
    assert ident("x") == "x" and ident("y") == "y"
    const = CoarseningMap.constant(["x", "y"])
    assert const("x") == const("y") == "all"
    assert set(const.v_labels) == {"all"}
    assert const.group("all") == ("x", "y")


def test_coarsening_json_round_trip():
    cm = CoarseningMap({"a": "lo", "b": "hi"})
    assert CoarseningMap.from_json(cm.to_json()).mapping == cm.mapping


def test_design_json_round_trip():
    d = make_design(k=3, q=4, tau=6.0,
                    window_sets={1: frozenset({1, 2}), 2: frozenset({2, 3}), 3: frozenset({4})})
    assert TrialDesign.from_json(d.to_json()) == d


def test_design_control_windows_are_union():
    d = make_design(k=2, q=3, window_sets={1: frozenset({1}), 2: frozenset({2, 3})})
    assert d.control_windows == frozenset({1, 2, 3})


def test_design_rejects_empty_window_set():
    with pytest.raises(DataError, match="empty window set"):
        make_design(k=1, q=2, window_sets={1: frozenset()})


def test_validate_clean_dataset():
    rows = [(1.0, 1, a, w, z) for a in (0, 1) for w in (1, 2, 3) for z in ("a", "b")]
    rep = validate(make_dataset(rows, design=small_design()))
    assert rep.clean
    assert rep.arm_window_violations == []
    assert json.loads(rep.to_json())["clean"] is True


def test_validate_flags_arm_outside_design_windows():
    d = make_design(k=2, q=2, window_sets={1: frozenset({1}), 2: frozenset({2})})
    rows = [(1.0, 1, 1, 1, "z"), (5.0, 0, 0, 1, "z"), (2.0, 1, 2, 1, "z"), (3.0, 0, 2, 2, "z")]
    rep = validate(make_dataset(rows, design=d))
    assert not rep.clean
    assert [v["arm"] for v in rep.arm_window_violations] == [2]
    assert rep.arm_window_violations[0]["window"] == 1


def test_validate_flags_undefined_rr_without_controls():
    d = make_design(k=2, q=2, window_sets={1: frozenset({1}), 2: frozenset({2})})
    rows = [(1.0, 1, 1, 1, "z"), (5.0, 0, 0, 1, "z"), (3.0, 0, 2, 2, "z")]
    rep = validate(make_dataset(rows, design=d))
    assert {"arm": 2, "v": "all"} in rep.undefined_rr


def test_validate_matches_direct_counts():
    # flags exactly the strata with zero empirical mass
    rng = np.random.default_rng(7)
    d = make_design(k=2, q=2, window_sets={1: frozenset({1, 2}), 2: frozenset({2})})
    rows = []
    for _ in range(40):
        arm = int(rng.integers(0, 3))
        pool = d.window_sets[arm] if arm else d.control_windows
        w = int(rng.choice(sorted(pool)))
        rows.append((float(rng.uniform(0.1, 9.0)), int(rng.integers(0, 2)), arm, w,
                     str(rng.choice(["a", "b"]))))
    ds = make_dataset(rows, design=d)
    rep = validate(ds)
    for a in (1, 2):
        in_set = [r for r in rows if r[2] == a and r[3] in d.window_sets[a]]
        assert ({"arm": a, "v": "all"} in rep.empty_av) == (len(in_set) == 0)


def test_dataset_subset_and_window_mask():
    rows = [(1.0, 1, 0, 1, "a"), (2.0, 0, 1, 2, "a"), (3.0, 1, 1, 3, "b")]
    ds = make_dataset(rows, design=small_design())
    assert ds.window_mask({2, 3}).tolist() == [False, True, True]
    sub = ds.subset(np.array([True, False, True]))
    assert sub.n == 2 and list(sub.x) == [1.0, 3.0]


def test_separate_kind_restricts_arm_labels():
    rows = [(1.0, 1, 0, 1, "a"), (2.0, 0, 2, 1, "a")]
    ds = make_dataset(rows, design=make_design(k=2), kind="separate:2")
    assert sorted(set(ds.arm.tolist())) == [0, 2]
    with pytest.raises(DataError, match="arm"):
        make_dataset([(1.0, 1, 1, 1, "a")], design=make_design(k=2), kind="separate:2")
