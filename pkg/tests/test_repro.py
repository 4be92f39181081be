import json

import numpy as np
import pytest

import platformrr.repro as repro
from platformrr.errors import EstimationError
from platformrr.influence import covariance_rr
from platformrr.simulate import load_preset, true_rr

from conftest import make_dataset, make_design

TAU = 10.0


def degenerate_dataset(d_ctrl, d_arms, n_ctrl, n_arms):
    """Counts to one-window records: events at 0, censoring at tau."""
    design = make_design(k=len(d_arms), q=1, tau=TAU)
    rows = []
    for a, (d, n) in enumerate(zip([d_ctrl, *d_arms], [n_ctrl, *n_arms])):
        rows += [(0.0, 1, a, 1, "z")] * d + [(TAU, 0, a, 1, "z")] * (n - d)
    return make_dataset(rows, design=design)


def test_binary_estimate_matches_record_pipeline():
    ds = degenerate_dataset(35, [14, 20], 1750, [1750, 1750])
    full = covariance_rr(ds, (1, 2), "all", 6.0)
    closed = repro.binary_joint_estimate(35, [14, 20], 1750, [1750, 1750], t=6.0)
    np.testing.assert_allclose(closed.gamma, full.gamma, rtol=1e-12)
    np.testing.assert_allclose(closed.sigma_gamma, full.sigma_gamma, rtol=1e-10)
    np.testing.assert_allclose(closed.sigma_phi, full.sigma_phi, rtol=1e-10)
    assert closed.n == full.n == 5250


def test_binary_point_estimate_closed_form():
    est = repro.binary_joint_estimate(35, [14], 1750, [1750], t=6.0)
    expected = (1 - np.exp(-14 / 1750)) / (1 - np.exp(-35 / 1750))
    assert est.gamma[0] == pytest.approx(expected, rel=1e-14)


def test_binary_covariance_sharing_controls():
    args = (0.02, [0.007, 0.01], 1750, [1750, 1750])
    gamma_s, cov_s = repro.binary_rr_covariance(*args, shared=True)
    gamma_u, cov_u = repro.binary_rr_covariance(*args, shared=False)
    np.testing.assert_array_equal(gamma_s, gamma_u)
    assert cov_u[0, 1] == 0.0
    assert cov_s[0, 1] > 0.0
    np.testing.assert_allclose(np.diag(cov_s), np.diag(cov_u), rtol=1e-14)
    assert np.all(np.linalg.eigvalsh(cov_s) > 0)


def test_binary_estimate_rejects_empty_margins():
    with pytest.raises(EstimationError, match="control"):
        repro.binary_joint_estimate(0, [14], 1750, [1750], t=6.0)
    with pytest.raises(EstimationError, match="zero events"):
        repro.binary_joint_estimate(35, [0], 1750, [1750], t=6.0)


def test_table3_study_layout():
    s = repro.table3_study(reps=200, seed=3)
    assert s.columns == ("design", "power_arm1", "power_arm2", "power_contrast")
    assert [row[0] for row in s.rows] == ["platform", "separate", "expanded"]
    for row in s.rows:
        assert all(0.0 <= v <= 1.0 for v in row[1:])
    assert s.meta["n_per_arm"] == {"platform": 1750, "separate": 1750, "expanded": 2333}
    assert s.meta["rr"] == [0.35, 0.5]
    again = repro.table3_study(reps=200, seed=3)
    assert again.rows == s.rows


def test_efficiency_study_covers_every_pair():
    s = repro.section6_efficiency(reps=3, seed=2)
    assert len(s.rows) == 45  # ten arms, all unordered pairs
    assert s.columns[:3] == ("arm_1", "arm_2", "windows_overlap")
    seen_overlap = {row[2] for row in s.rows}
    assert seen_overlap == {True, False}
    for row in s.as_dicts():
        assert row["width_ratio"] == pytest.approx(
            row["mean_width_platform"] / row["mean_width_separate"], rel=1e-12
        )
        assert row["mc_se"] > 0.0


def test_width_ratio_bins_counts():
    s = repro.section6_efficiency(reps=3, seed=2)
    edges = [0.0, 0.9, 1.0, 2.0]
    b = repro.width_ratio_bins(s, edges=edges)
    assert b.columns == ("bin_start", "bin_end", "count")
    assert len(b.rows) == 3
    counts = [row[2] for row in b.rows]
    ratios = s.column("width_ratio")
    assert sum(counts) == len(ratios)
    assert counts[0] == sum(1 for x in ratios if x < 0.9)


def test_coverage_study_reports_true_values():
    s = repro.section6_coverage(reps=6, seed=2, arms=(2, 10))
    assert [row[0] for row in s.rows] == [2, 10]
    preset = load_preset("section6")
    for arm, true, coverage, _ in s.rows:
        assert true == pytest.approx(true_rr(preset, arm, "all", 6.0), rel=1e-12)
        assert 0.0 <= coverage <= 1.0


def test_power_study_layout():
    s = repro.section6_power(reps=3, seed=2, candidates=(7,), epsilons=(0.1, 0.3))
    assert s.columns == ("design", "candidate", "method", "epsilon", "reject_rate", "mc_se")
    assert len(s.rows) == 2 * 1 * 2 * 2  # designs x candidates x methods x epsilons
    assert {row[0] for row in s.rows} == {"platform", "separate"}
    assert {row[2] for row in s.rows} == {"intersection", "lrt"}
    for row in s.rows:
        assert 0.0 <= row[4] <= 1.0


def test_control_share_study_layout():
    s = repro.appendix_f_study(reps=3, seed=1, shares=(0.4, 0.5))
    assert [row[0] for row in s.rows] == [0.4, 0.5]
    for target, achieved, mean_cov, _, mean_corr, mean_width in s.rows:
        assert achieved == pytest.approx(target, abs=0.01)
        assert -1.0 <= mean_corr <= 1.0
        assert mean_width > 0.0


def test_study_result_serialization():
    s = repro.table3_study(reps=50, seed=0)
    lines = s.to_csv().splitlines()
    assert lines[0] == "design,power_arm1,power_arm2,power_contrast"
    assert len(lines) == 4
    payload = json.loads(s.to_json())
    assert payload["study"] == s.study
    assert payload["columns"] == list(s.columns)
    assert len(payload["rows"]) == 3
    assert payload["meta"]["reps"] == 50
    assert s.column("power_arm1") == [row[1] for row in s.rows]
    d = s.as_dicts()[0]
    assert d["design"] == "platform"


def test_studies_registry_names():
    assert set(repro.STUDIES) == {"table3", "section6-efficiency", "section6-power", "appendixF"}
    for fn in repro.STUDIES.values():
        assert callable(fn)
