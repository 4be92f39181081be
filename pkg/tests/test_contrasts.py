import json

import numpy as np
import pytest

from platformrr.contrasts import (
    ADDITIVE,
    LOG_RATIO,
    MULTIPLICATIVE,
    contrast_estimate_platform,
    custom_contrast,
    estimate_separate,
    get_contrast,
    separate_arm_summary,
    validate_contrast,
    wald_ci,
    width_ratio,
)
from platformrr.errors import EstimationError
from platformrr.influence import JointRREstimate, covariance_rr
from platformrr.simulate import simulate_platform, simulate_separate

from conftest import make_dataset, make_design, shared_window_scenario


def joint(gamma, sigma, n=100):
    g = np.asarray(gamma, dtype=float)
    s = np.asarray(sigma, dtype=float)
    return JointRREstimate(
        t=6.0, v="all", arms=tuple(range(1, len(g) + 1)),
        gamma=g, sigma_gamma=s, sigma_phi=s / np.outer(g, g), n=n,
    )


def test_builtin_contrasts_satisfy_sign_condition():
    for c in (ADDITIVE, MULTIPLICATIVE, LOG_RATIO):
        ok, witness = validate_contrast(c)
        assert ok and witness is None


def test_sum_contrast_fails_with_witness():
    bad = custom_contrast(lambda r1, r2: r1 + r2, grad=lambda r1, r2: (1.0, 1.0))
    ok, witness = validate_contrast(bad)
    assert not ok
    r1, r2 = witness
    d1, d2 = bad.grad(r1, r2)
    assert not d1 * d2 < 0


def test_get_contrast_by_name_and_passthrough():
    assert get_contrast("additive") is ADDITIVE
    assert get_contrast(MULTIPLICATIVE) is MULTIPLICATIVE
    with pytest.raises(EstimationError, match="unknown contrast"):
        get_contrast("ratio-of-logs")


def test_additive_identity_covariance_interval():
    est = joint([0.6, 0.4], np.eye(2), n=100)
    res = contrast_estimate_platform(est, 1, 2, "additive", alpha=0.05)
    assert res.theta == pytest.approx(0.2)
    assert res.sigma2 == pytest.approx(2.0)
    half = res.ci.upper - res.theta
    assert half == pytest.approx(1.959963985 * np.sqrt(2.0 / 100.0), abs=1e-9)
    assert res.ci.width == pytest.approx(2 * half)


def test_multiplicative_point_estimate():
    est = joint([0.35, 0.5], np.eye(2))
    res = contrast_estimate_platform(est, 1, 2, "multiplicative")
    assert res.theta == pytest.approx(0.7)
    # grad (1/r2, -r1/r2^2) = (2, -1.4); sigma2 = 4 + 1.96
    assert res.sigma2 == pytest.approx(5.96)


def test_cross_term_enters_platform_variance():
    sigma = [[1.0, 0.3], [0.3, 1.0]]
    res = contrast_estimate_platform(joint([0.5, 0.5], sigma), 1, 2, "additive")
    assert res.sigma2 == pytest.approx(2.0 - 2 * 0.3)


def test_finite_difference_gradient_default():
    c = custom_contrast(lambda r1, r2: r1 / r2)
    for r1, r2 in [(0.35, 0.5), (1.2, 0.8), (0.05, 1.9)]:
        fd = c.grad(r1, r2)
        exact = MULTIPLICATIVE.grad(r1, r2)
        np.testing.assert_allclose(fd, exact, rtol=1e-5)


def test_sign_violation_warns():
    bad = custom_contrast(lambda r1, r2: r1 + r2, grad=lambda r1, r2: (1.0, 1.0), id="sum")
    with pytest.warns(UserWarning, match="sign condition"):
        contrast_estimate_platform(joint([0.5, 0.5], np.eye(2)), 1, 2, bad)


def test_log_ratio_consistent_with_multiplicative():
    sc = shared_window_scenario(n_per_arm=400)
    est = covariance_rr(simulate_platform(sc, 11), (1, 2), "all", 6.0)
    mult = contrast_estimate_platform(est, 1, 2, "multiplicative")
    logr = contrast_estimate_platform(est, 1, 2, "log-ratio")
    assert logr.theta == pytest.approx(np.log(mult.theta), abs=1e-12)
    assert mult.sigma2 == pytest.approx(mult.theta**2 * logr.sigma2, rel=1e-10)


def separate_trial_rows(scale=1.0):
    rows = [(1.0, 1, 1, 1, "z"), (2.0, 1, 1, 1, "z"), (6.0 * scale, 0, 1, 1, "z"),
            (1.5, 1, 0, 1, "z"), (3.0, 1, 0, 1, "z"), (5.0, 0, 0, 1, "z")]
    return rows


def test_identical_trials_give_null_contrast():
    rows = separate_trial_rows()
    ds1 = make_dataset(rows, design=make_design(k=1), kind="separate")
    rows2 = [(x, d, 2 if a == 1 else 0, w, z) for (x, d, a, w, z) in rows]
    ds2 = make_dataset(rows2, design=make_design(k=2), kind="separate")
    res = estimate_separate([ds1, ds2], 1, 2, "all", 4.0, "additive")
    assert res.theta == 0.0
    assert res.source == "separate"
    mult = estimate_separate([ds1, ds2], 1, 2, "all", 4.0, "multiplicative")
    assert mult.theta == pytest.approx(1.0, abs=1e-14)


def test_separate_requires_every_arm():
    ds1 = make_dataset(separate_trial_rows(), kind="separate")
    with pytest.raises(EstimationError, match="arm 2"):
        estimate_separate([ds1], 1, 2, "all", 4.0, "additive")


def test_separate_summary_matches_joint_machinery():
    ds = make_dataset(separate_trial_rows(), kind="separate")
    gamma, vhat, m = separate_arm_summary(ds, 1, "all", 4.0)
    est = covariance_rr(ds, (1,), "all", 4.0, survival="km")
    assert m == 6
    assert gamma == pytest.approx(est.gamma[0], abs=1e-14)
    assert vhat == pytest.approx(est.sigma_gamma[0, 0], rel=1e-12)


def test_separate_variance_tracks_monte_carlo():
    sc = shared_window_scenario(n_per_arm=600)
    thetas, var_hats = [], []
    for seed in range(400):
        trials = simulate_separate(sc, seed)
        res = estimate_separate(trials, 1, 2, "all", 6.0, "additive")
        thetas.append(res.theta)
        var_hats.append(res.sigma2 / res.ci.n_effective)
    mc = np.var(thetas, ddof=1)
    assert np.mean(var_hats) == pytest.approx(mc, rel=0.10)


def test_width_ratio_values():
    wide = wald_ci(0.0, 1.0, 0.05, 100)
    assert width_ratio(wide, wide) == pytest.approx(1.0)
    narrower = wald_ci(0.0, 0.8, 0.05, 100)
    assert width_ratio(narrower, wide) == pytest.approx(0.8)
    degenerate = wald_ci(0.0, 0.0, 0.05, 100)
    with pytest.raises(EstimationError, match="zero width"):
        width_ratio(wide, degenerate)


def test_contrast_result_json():
    res = contrast_estimate_platform(joint([0.35, 0.5], np.eye(2)), 1, 2, "additive")
    payload = json.loads(res.to_json())
    assert payload["arms"] == [1, 2]
    assert payload["contrast_id"] == "additive"
    assert payload["source"] == "platform"
    assert payload["ci"]["lower"] < payload["theta"] < payload["ci"]["upper"]
