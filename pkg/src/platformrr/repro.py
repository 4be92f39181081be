"""Monte Carlo reproduction studies behind the `repro` CLI subcommand.

Four studies are shipped:

``table3``
    Power of one-sided relative-risk tests in three binary two-arm
    designs (shared control, separate controls, and a shared control
    with the separate trials' participant budget). Outcomes are
    degenerate binary survival records, so the plug-in estimator and
    its influence variance reduce to closed forms that are vectorized
    over replications; ``binary_joint_estimate`` exposes the same
    closed forms as a JointRREstimate and is tested against the full
    pipeline for exact agreement.

``section6-efficiency``
    Ratios of platform versus separate-trials confidence interval
    widths for every intervention pair of the staggered ten-arm
    scenario, summarized per pair and as histogram bins.

``section6-power``
    Rejection-rate curves of the intersection and likelihood-ratio
    noninferiority tests over a grid of margins, for pre-selected
    candidate arms, on platform and separate-trials data.

``appendixF``
    Shared-control resampling: achieved control share, the induced
    relative-risk covariance, and contrast interval width as the
    target share varies.

All studies run under the seeded `monte_carlo` engine, so results are
byte-identical for a given seed regardless of thread count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .contrasts import separate_arm_summary
from .errors import EstimationError
from .influence import JointRREstimate, covariance_rr
from .noninferiority import NITestConfig, intersection_test, lrt_test
from .simulate import (
    control_share,
    load_preset,
    monte_carlo,
    resample_shared_controls,
    simulate_platform,
    simulate_separate,
    true_rr,
    _generator,
)

__all__ = [
    "StudyResult",
    "binary_rr_covariance",
    "binary_joint_estimate",
    "table3_study",
    "section6_efficiency",
    "section6_coverage",
    "section6_power",
    "appendix_f_study",
    "width_ratio_bins",
    "STUDIES",
]


@dataclass(frozen=True)
class StudyResult:
    """One study's output table plus reproducibility metadata."""

    study: str
    columns: tuple
    rows: tuple
    meta: dict = field(default_factory=dict)

    def column(self, name) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def as_dicts(self) -> list:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_cell(x) for x in row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {
                "study": self.study,
                "columns": list(self.columns),
                "rows": [list(r) for r in self.rows],
                "meta": self.meta,
            },
            indent=2,
        )


def _cell(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def binary_rr_covariance(p_ctrl, p_arms, n_ctrl, n_arms, shared=True):
    """Delta-method mean and covariance of exp-transform RR estimates.

    On degenerate binary records (event at 0 or censored at tau) the
    plug-in uses the single-jump Nelson-Aalen transform, so arm a's
    incidence estimate is 1 - exp(-d_a/n_a) and the relative risk is
    its ratio to the control's. Sharing the control arm induces the
    positive cross term; ``shared=False`` zeroes it.

    Returns (gamma, cov) where cov is the covariance of the estimator
    vector itself (1/n scaling included).
    """
    p0 = float(p_ctrl)
    s0 = math.exp(-p0)
    r0 = 1.0 - s0
    if r0 <= 0:
        raise EstimationError("control incidence is zero; relative risks undefined")
    var0 = s0 * s0 * p0 * (1.0 - p0) / float(n_ctrl)
    k = len(p_arms)
    n_arms = [float(x) for x in (n_arms if np.ndim(n_arms) else [n_arms] * k)]
    gamma = np.empty(k)
    own = np.empty(k)
    for i, (p, n) in enumerate(zip(p_arms, n_arms)):
        s = math.exp(-float(p))
        gamma[i] = (1.0 - s) / r0
        own[i] = s * s * float(p) * (1.0 - float(p)) / n
    cov = np.outer(gamma, gamma) * (var0 / r0**2) if shared else np.diag(gamma**2 * (var0 / r0**2))
    cov[np.diag_indices(k)] += own / r0**2
    return gamma, cov


def binary_joint_estimate(d_ctrl, d_arms, n_ctrl, n_arms, t, v="all", arms=None) -> JointRREstimate:
    """Closed-form JointRREstimate from binary event counts.

    Exact counterpart of running `covariance_rr` on the degenerate
    records; used by the vectorized studies and the least-favorable
    null harness.
    """
    if d_ctrl <= 0:
        raise EstimationError("no control events; relative risks undefined")
    k = len(d_arms)
    n_arms = [float(x) for x in (n_arms if np.ndim(n_arms) else [n_arms] * k)]
    p_arms = [d / n for d, n in zip(d_arms, n_arms)]
    gamma, cov = binary_rr_covariance(d_ctrl / n_ctrl, p_arms, n_ctrl, n_arms, shared=True)
    n_total = float(n_ctrl) + sum(n_arms)
    sigma_gamma = cov * n_total
    if np.any(gamma <= 0):
        raise EstimationError("an arm has zero events; log-RR covariance undefined")
    sigma_phi = sigma_gamma / np.outer(gamma, gamma)
    return JointRREstimate(
        t=float(t),
        v=str(v),
        arms=tuple(arms) if arms is not None else tuple(range(1, k + 1)),
        gamma=gamma,
        sigma_gamma=sigma_gamma,
        sigma_phi=sigma_phi,
        n=int(round(n_total)),
    )


def table3_study(reps=10000, seed=0, alpha=0.025, contrast_margin=0.1, test_se="design", **_) -> StudyResult:
    """Rejection rates for three binary designs at the preset's law.

    Designs: `platform` (one shared control, 1750/arm), `separate`
    (two trials with own controls, 1750/arm), `expanded` (shared
    control, the separate trials' total budget split over 3 arms).
    Columns: one-sided power to detect each arm's effect (upper Wald
    bound below 1) and power for the arm difference (upper bound below
    `contrast_margin`). ``test_se="design"`` evaluates Wald SEs at the
    design parameters; ``"plugin"`` re-estimates them per replication.
    Replications whose control arm has zero events count as
    non-rejections.
    """
    if test_se not in ("design", "plugin"):
        raise EstimationError(f"unknown test_se mode {test_se!r}")
    sc = load_preset("table3")
    p0 = sc.p0
    g1, g2 = sc.rr[1], sc.rr[2]
    base = int(round(sc.enrollment[1]))
    expanded = int(round(base * 4 / 3))
    z = float(ndtri(1.0 - alpha))
    rng = _generator(seed)
    reps = int(reps)

    def power_row(n, shared):
        d0 = rng.binomial(n, p0, size=reps)
        d1 = rng.binomial(n, g1 * p0, size=reps)
        d2 = rng.binomial(n, g2 * p0, size=reps)
        if shared:
            d0b = d0
        else:
            d0b = rng.binomial(n, p0, size=reps)
        ok = (d0 > 0) & (d0b > 0)
        r0 = 1.0 - np.exp(-d0 / n)
        r0b = 1.0 - np.exp(-d0b / n)
        with np.errstate(divide="ignore", invalid="ignore"):
            gh1 = (1.0 - np.exp(-d1 / n)) / r0
            gh2 = (1.0 - np.exp(-d2 / n)) / r0b
        if test_se == "design":
            _, cov = binary_rr_covariance(p0, (g1 * p0, g2 * p0), n, n, shared=shared)
            v1 = np.full(reps, cov[0, 0])
            v2 = np.full(reps, cov[1, 1])
            c12 = np.full(reps, cov[0, 1])
        else:
            s0, s0b = np.exp(-d0 / n), np.exp(-d0b / n)
            var0 = s0**2 * (d0 / n) * (1 - d0 / n) / n
            var0b = s0b**2 * (d0b / n) * (1 - d0b / n) / n
            s1, s2 = np.exp(-d1 / n), np.exp(-d2 / n)
            own1 = s1**2 * (d1 / n) * (1 - d1 / n) / n
            own2 = s2**2 * (d2 / n) * (1 - d2 / n) / n
            with np.errstate(divide="ignore", invalid="ignore"):
                v1 = (own1 + gh1**2 * var0) / r0**2
                v2 = (own2 + gh2**2 * var0b) / r0b**2
                c12 = np.where(shared, gh1 * gh2 * var0 / r0**2, 0.0)
        rej1 = ok & (gh1 + z * np.sqrt(v1) < 1.0)
        rej2 = ok & (gh2 + z * np.sqrt(v2) < 1.0)
        vd = np.maximum(v1 + v2 - 2.0 * c12, 0.0)
        rejc = ok & (gh1 - gh2 + z * np.sqrt(vd) < contrast_margin)
        return float(np.mean(rej1)), float(np.mean(rej2)), float(np.mean(rejc))

    rows = []
    for name, n, shared in (("platform", base, True), ("separate", base, False), ("expanded", expanded, True)):
        rows.append((name,) + power_row(n, shared))
    return StudyResult(
        study="table3",
        columns=("design", "power_arm1", "power_arm2", "power_contrast"),
        rows=tuple(rows),
        meta={
            "reps": reps,
            "seed": seed,
            "alpha": alpha,
            "p0": p0,
            "rr": [g1, g2],
            "n_per_arm": {"platform": base, "separate": base, "expanded": expanded},
            "contrast_margin": contrast_margin,
            "test_se": test_se,
        },
    )


def _pairs(k):
    return [(a, b) for a in range(1, k + 1) for b in range(a + 1, k + 1)]


def _windows_overlap(design, a, b) -> bool:
    return bool(design.window_sets[a] & design.window_sets[b])


def section6_efficiency(reps=300, seed=0, scale=0.1, t=6.0, v="all", alpha=0.05, threads=1, **_) -> StudyResult:
    """Per-pair platform/separate CI width ratios on the staggered scenario.

    Each replication simulates one platform trial and the matching
    separate trials from independent substreams and records the 95%
    additive contrast interval widths for every arm pair under both
    designs. The reported ratio divides the Monte Carlo mean widths
    (the per-replication ratio of noisy widths is biased upward at
    small scale, so it is not averaged directly); its MC-SE follows
    from the delta method with independent numerator and denominator.
    Pairs with overlapping windows are expected below 1; disjoint
    pairs at 1.
    """
    sc = load_preset("section6").scale(scale)
    k = sc.design.k
    arms = tuple(range(1, k + 1))
    z = float(ndtri(1.0 - alpha / 2.0))
    pairs = _pairs(k)

    def analyze(scn, ss):
        ss_p, ss_s = ss.spawn(2)
        est = covariance_rr(simulate_platform(scn, ss_p), arms, v, t)
        sig = est.sigma_gamma / est.n
        summaries = {}
        for a, ds in zip(arms, simulate_separate(scn, ss_s)):
            summaries[a] = separate_arm_summary(ds, a, v, t)
        out = {}
        for a, b in pairs:
            i, j = est.arm_index(a), est.arm_index(b)
            out[f"wp_{a}_{b}"] = 2.0 * z * math.sqrt(max(sig[i, i] + sig[j, j] - 2.0 * sig[i, j], 0.0))
            (_, va, ma), (_, vb, mb) = summaries[a], summaries[b]
            out[f"ws_{a}_{b}"] = 2.0 * z * math.sqrt(va / ma + vb / mb)
        return out

    mc = monte_carlo(sc, analyze, reps, seed, threads=threads)
    rows = []
    for a, b in pairs:
        wp, wp_se = mc.mean(f"wp_{a}_{b}"), mc.se(f"wp_{a}_{b}")
        ws, ws_se = mc.mean(f"ws_{a}_{b}"), mc.se(f"ws_{a}_{b}")
        ratio = wp / ws
        ratio_se = math.sqrt(wp_se**2 + ratio**2 * ws_se**2) / ws
        rows.append((a, b, _windows_overlap(sc.design, a, b), wp, ws, ratio, ratio_se))
    return StudyResult(
        study="section6-efficiency",
        columns=(
            "arm_1", "arm_2", "windows_overlap",
            "mean_width_platform", "mean_width_separate", "width_ratio", "mc_se",
        ),
        rows=tuple(rows),
        meta={"reps": int(reps), "seed": seed, "scale": scale, "t": t, "v": v, "alpha": alpha},
    )


def width_ratio_bins(result: StudyResult, edges=None) -> StudyResult:
    """Histogram bins of a width-ratio table's per-pair ratios."""
    ratios = result.column("width_ratio")
    if edges is None:
        edges = np.arange(0.5, 1.2000001, 0.05)
    counts, edges = np.histogram(ratios, bins=np.asarray(edges, dtype=np.float64))
    rows = tuple(
        (float(lo), float(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts)
    )
    return StudyResult(
        study=result.study + "-bins",
        columns=("bin_start", "bin_end", "count"),
        rows=rows,
        meta=dict(result.meta, pairs=len(ratios)),
    )


def section6_coverage(reps=1000, seed=0, scale=0.1, arms=(2, 7, 10), t=6.0, v="all", alpha=0.05, threads=1, **_) -> StudyResult:
    """Empirical Wald CI coverage of the true relative risks."""
    sc = load_preset("section6").scale(scale)
    arms = tuple(int(a) for a in arms)
    truth = {a: true_rr(sc, a, v, t) for a in arms}
    z = float(ndtri(1.0 - alpha / 2.0))

    def analyze(scn, ss):
        est = covariance_rr(simulate_platform(scn, ss), arms, v, t)
        out = {}
        for a in arms:
            i = est.arm_index(a)
            half = z * est.se(a)
            out[f"cover_{a}"] = float(abs(est.gamma[i] - truth[a]) <= half)
        return out

    mc = monte_carlo(sc, analyze, reps, seed, threads=threads)
    rows = tuple((a, truth[a], mc.mean(f"cover_{a}"), mc.se(f"cover_{a}")) for a in arms)
    return StudyResult(
        study="section6-coverage",
        columns=("arm", "true_rr", "coverage", "mc_se"),
        rows=rows,
        meta={"reps": int(reps), "seed": seed, "scale": scale, "t": t, "v": v, "alpha": alpha},
    )


def _separate_joint(trials, arms, v, t) -> JointRREstimate:
    """Block-diagonal JointRREstimate from independent 2-arm trials."""
    k = len(arms)
    gamma = np.empty(k)
    var = np.empty(k)
    sizes = np.empty(k)
    for i, (a, ds) in enumerate(zip(arms, trials)):
        gamma[i], var[i], sizes[i] = separate_arm_summary(ds, a, v, t)
    n = float(sizes.sum())
    sigma_gamma = np.diag(var * (n / sizes))
    if np.any(gamma <= 0):
        raise EstimationError("an arm has zero estimated risk; log scale undefined")
    sigma_phi = sigma_gamma / np.outer(gamma, gamma)
    return JointRREstimate(
        t=float(t), v=str(v), arms=tuple(arms), gamma=gamma,
        sigma_gamma=sigma_gamma, sigma_phi=sigma_phi, n=int(round(n)),
    )


def section6_power(reps=200, seed=0, scale=0.1, candidates=(7, 9),
                   epsilons=(0.05, 0.1, 0.15, 0.2, 0.25, 0.3), delta=0.7,
                   alpha=0.025, t=6.0, v="all", threads=1, **_) -> StudyResult:
    """Rejection-rate curves of both noninferiority tests vs the margin.

    For each candidate arm, margin value, design (platform or separate
    trials), and method, reports the Monte Carlo rejection rate of the
    composite noninferiority null at efficacy threshold `delta`.
    """
    sc = load_preset("section6").scale(scale)
    k = sc.design.k
    arms = tuple(range(1, k + 1))
    candidates = tuple(int(c) for c in candidates)
    epsilons = tuple(float(e) for e in epsilons)

    def analyze(scn, ss):
        ss_p, ss_s = ss.spawn(2)
        ests = {
            "platform": covariance_rr(simulate_platform(scn, ss_p), arms, v, t),
            "separate": _separate_joint(simulate_separate(scn, ss_s), arms, v, t),
        }
        out = {}
        for design, est in ests.items():
            for cand in candidates:
                for eps in epsilons:
                    cfg = NITestConfig(ref_arm=cand, delta=delta, epsilon=eps, alpha=alpha, t=t, v=v)
                    out[f"{design}_cand{cand}_eps{eps:g}_intersection"] = float(
                        intersection_test(est, cfg).reject
                    )
                    out[f"{design}_cand{cand}_eps{eps:g}_lrt"] = float(lrt_test(est, cfg).reject)
        return out

    mc = monte_carlo(sc, analyze, reps, seed, threads=threads)
    rows = []
    for design in ("platform", "separate"):
        for cand in candidates:
            for method in ("intersection", "lrt"):
                for eps in epsilons:
                    key = f"{design}_cand{cand}_eps{eps:g}_{method}"
                    rows.append((design, cand, method, eps, mc.mean(key), mc.se(key)))
    return StudyResult(
        study="section6-power",
        columns=("design", "candidate", "method", "epsilon", "reject_rate", "mc_se"),
        rows=tuple(rows),
        meta={
            "reps": int(reps), "seed": seed, "scale": scale, "delta": delta,
            "alpha": alpha, "t": t, "v": v,
        },
    )


def appendix_f_study(reps=200, seed=0, scale=1.0, shares=(0.35, 0.4, 0.45, 0.5),
                     t=6.0, v="all", alpha=0.05, threads=1, **_) -> StudyResult:
    """Control-sharing dial: covariance and interval width vs target share.

    Each replication simulates the two-arm four-window preset, draws
    one of the 24 window-type assignments uniformly, and resamples the
    dataset to each target share. Reported per share: achieved share,
    the cross covariance of the two relative risks, their correlation,
    and the additive contrast CI width.
    """
    import itertools

    sc = load_preset("appendixF").scale(scale)
    shares = tuple(float(s) for s in shares)
    z = float(ndtri(1.0 - alpha / 2.0))
    typings = [
        dict(zip(range(1, sc.design.q + 1), perm))
        for perm in itertools.permutations(("L", "H", "B_all", "B_sub"))
    ]

    def analyze(scn, ss):
        children = ss.spawn(len(shares) + 1)
        rng = _generator(children[0])
        ds = simulate_platform(scn, rng)
        typing = typings[int(rng.integers(len(typings)))]
        out = {}
        for s, child in zip(shares, children[1:]):
            sub = resample_shared_controls(ds, s, typing, _generator(child))
            est = covariance_rr(sub, (1, 2), v, t)
            sig = est.sigma_gamma / est.n
            out[f"share{s:g}_achieved"] = control_share(sub)
            out[f"share{s:g}_cov"] = sig[0, 1]
            out[f"share{s:g}_corr"] = sig[0, 1] / math.sqrt(sig[0, 0] * sig[1, 1])
            out[f"share{s:g}_width"] = 2.0 * z * math.sqrt(
                max(sig[0, 0] + sig[1, 1] - 2.0 * sig[0, 1], 0.0)
            )
        return out

    mc = monte_carlo(sc, analyze, reps, seed, threads=threads)
    rows = tuple(
        (
            s,
            mc.mean(f"share{s:g}_achieved"),
            mc.mean(f"share{s:g}_cov"),
            mc.se(f"share{s:g}_cov"),
            mc.mean(f"share{s:g}_corr"),
            mc.mean(f"share{s:g}_width"),
        )
        for s in shares
    )
    return StudyResult(
        study="appendixF",
        columns=("target_share", "achieved_share", "mean_cov", "cov_mc_se", "mean_corr", "mean_width"),
        rows=rows,
        meta={"reps": int(reps), "seed": seed, "scale": scale, "t": t, "v": v, "alpha": alpha},
    )


STUDIES = {
    "table3": table3_study,
    "section6-efficiency": section6_efficiency,
    "section6-power": section6_power,
    "appendixF": appendix_f_study,
}
