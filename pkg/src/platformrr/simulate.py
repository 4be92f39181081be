"""Synthetic platform and separate-trial data, resampling, Monte Carlo.

A Scenario fixes the generative law: the trial design, expected per-arm
enrollment by window, the covariate mix per window, control-arm hazard
segments (piecewise constant in calendar time) per (window, z), a
hazard-ratio vaccine efficacy per arm, uniform loss to follow-up, and an
administrative censoring calendar time. Within a window, each active arm
and control is assigned with probability 1/(k_w + 1); enrollment is
uniform over the window's calendar span.

A "binary" scenario instead realizes Bernoulli outcomes directly: an
event places the record at x=0 with delta=1, a non-event at x=tau with
delta=0, so the incidence by tau equals the Bernoulli mean exactly.

All randomness flows through Philox generators keyed by SeedSequence;
replication seeds are pre-spawned so Monte Carlo results do not depend
on worker thread counts.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from . import _kernels
from .data import CoarseningMap, Dataset, TrialDesign
from .errors import DataError, EstimationError, InfeasibleError

__all__ = [
    "Scenario",
    "MCSummary",
    "attack_rate_to_hazard",
    "sample_piecewise_exponential",
    "simulate_platform",
    "simulate_separate",
    "resample_shared_controls",
    "control_share",
    "true_event_prob",
    "true_rr",
    "monte_carlo",
    "load_preset",
]

SCHEMA_VERSION = 1
RNG_ALGORITHM = "philox"

# far-future calendar bound for hazards constant from enrollment onward
OPEN_END = 1.0e9


def attack_rate_to_hazard(ar, horizon) -> float:
    """Constant hazard whose cumulative incidence over `horizon` is `ar`."""
    if not 0 <= ar < 1:
        raise EstimationError(f"attack rate {ar} outside [0, 1)")
    return -math.log1p(-ar) / horizon if ar > 0 else 0.0


@dataclass(frozen=True)
class Scenario:
    """Generative law for one simulated trial family.

    ``enrollment[w]`` is the expected count per arm (each active arm and
    control alike) in window w. ``control_hazards[w][z]`` lists calendar
    segments (start, end, hazard) governing a control participant
    enrolled in window w with covariate z; active arm a scales every
    hazard by 1 - ve[a]. Binary scenarios use ``p0``/``rr`` instead of
    hazards and ignore loss/admin censoring.
    """

    design: TrialDesign
    enrollment: dict
    covariate_weights: dict
    ve: dict = field(default_factory=dict)
    control_hazards: dict = field(default_factory=dict)
    kind: str = "survival"
    loss_upper: float = None
    admin_cutoff: float = None
    multinomial: bool = False
    p0: float = None
    rr: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        d = self.design
        for w in range(1, d.q + 1):
            if w not in self.enrollment or self.enrollment[w] < 0:
                raise DataError(f"window {w} needs a nonnegative enrollment size")
            weights = self.covariate_weights.get(w)
            if not weights:
                raise DataError(f"window {w} needs covariate weights")
            total = sum(weights.values())
            if abs(total - 1.0) > 1e-9 or any(p < 0 for p in weights.values()):
                raise DataError(f"window {w} covariate weights must be a distribution (sum {total})")
        if self.kind == "survival":
            for a in range(1, d.k + 1):
                ve = self.ve.get(a)
                if ve is None or not 0 <= ve < 1:
                    raise DataError(f"arm {a} needs vaccine efficacy in [0, 1)")
            for w in range(1, d.q + 1):
                for z in self.covariate_weights[w]:
                    segs = self.control_hazards.get(w, {}).get(z)
                    if not segs:
                        raise DataError(f"window {w}, z={z} needs control hazard segments")
                    for s, e, lam in segs:
                        if lam < 0 or not s < e:
                            raise DataError(f"bad hazard segment ({s}, {e}, {lam}) in window {w}")
        elif self.kind == "binary":
            if self.p0 is None or not 0 < self.p0 < 1:
                raise DataError("binary scenario needs p0 in (0, 1)")
            for a in range(1, d.k + 1):
                r = self.rr.get(a)
                if r is None or r <= 0 or r * self.p0 >= 1:
                    raise DataError(f"arm {a} needs relative risk with rr*p0 in (0, 1)")
        else:
            raise DataError(f"unknown scenario kind {self.kind!r}")

    @property
    def z_labels(self) -> tuple:
        labels = set()
        for weights in self.covariate_weights.values():
            labels |= set(weights)
        return tuple(sorted(labels))

    def scale(self, factor) -> "Scenario":
        """Same law with per-arm enrollment scaled by `factor`."""
        return replace(self, enrollment={w: c * factor for w, c in self.enrollment.items()})

    def to_json(self) -> str:
        obj = {
            "schema_version": SCHEMA_VERSION,
            "rng": RNG_ALGORITHM,
            "name": self.name,
            "kind": self.kind,
            "design": json.loads(self.design.to_json()),
            "enrollment": {str(w): c for w, c in sorted(self.enrollment.items())},
            "covariate_weights": {
                str(w): dict(sorted(ws.items())) for w, ws in sorted(self.covariate_weights.items())
            },
            "multinomial": self.multinomial,
        }
        if self.kind == "survival":
            obj["ve"] = {str(a): v for a, v in sorted(self.ve.items())}
            obj["control_hazards"] = {
                str(w): {z: [list(seg) for seg in segs] for z, segs in sorted(hz.items())}
                for w, hz in sorted(self.control_hazards.items())
            }
            obj["loss_upper"] = self.loss_upper
            obj["admin_cutoff"] = self.admin_cutoff
        else:
            obj["p0"] = self.p0
            obj["rr"] = {str(a): r for a, r in sorted(self.rr.items())}
        return json.dumps(obj, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        obj = json.loads(text)
        version = obj.get("schema_version")
        if version != SCHEMA_VERSION:
            raise DataError(f"unsupported scenario schema version {version!r}")
        design = TrialDesign.from_json(json.dumps(obj["design"]))
        kw = {
            "design": design,
            "enrollment": {int(w): float(c) for w, c in obj["enrollment"].items()},
            "covariate_weights": {
                int(w): {z: float(p) for z, p in ws.items()}
                for w, ws in obj["covariate_weights"].items()
            },
            "kind": obj.get("kind", "survival"),
            "multinomial": bool(obj.get("multinomial", False)),
            "name": obj.get("name", ""),
        }
        if kw["kind"] == "survival":
            kw["ve"] = {int(a): float(v) for a, v in obj["ve"].items()}
            kw["control_hazards"] = {
                int(w): {z: [tuple(seg) for seg in segs] for z, segs in hz.items()}
                for w, hz in obj["control_hazards"].items()
            }
            kw["loss_upper"] = obj.get("loss_upper")
            kw["admin_cutoff"] = obj.get("admin_cutoff")
        else:
            kw["p0"] = float(obj["p0"])
            kw["rr"] = {int(a): float(r) for a, r in obj["rr"].items()}
        return cls(**kw)


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def sample_piecewise_exponential(segments, enroll_time, rng, e=None) -> float:
    """One event time since enrollment by inversion; +inf past the last segment."""
    seg = np.asarray(sorted(segments), dtype=np.float64).reshape(-1, 3)
    if e is None:
        e = float(_generator(rng).standard_exponential())
    out = _kernels.piecewise_exp_times(
        np.ascontiguousarray(seg[:, 0]),
        np.ascontiguousarray(seg[:, 1]),
        np.ascontiguousarray(seg[:, 2]),
        np.array([float(enroll_time)]),
        np.array([float(e)]),
    )
    return float(out[0])


def _segment_arrays(scenario, w):
    """Per-z contiguous (start, end, hazard) arrays for window w."""
    table = {}
    for z, segs in scenario.control_hazards[w].items():
        seg = np.asarray(sorted(segs), dtype=np.float64).reshape(-1, 3)
        table[z] = (
            np.ascontiguousarray(seg[:, 0]),
            np.ascontiguousarray(seg[:, 1]),
            np.ascontiguousarray(seg[:, 2]),
        )
    return table


def _window_counts(scenario, rng, w, arms):
    """Enrollment counts per arm: deterministic expectation or multinomial."""
    c = scenario.enrollment[w]
    if not scenario.multinomial:
        return [int(round(c))] * len(arms)
    total = int(round(c * len(arms)))
    return list(rng.multinomial(total, np.full(len(arms), 1.0 / len(arms))))


def _draw_z(rng, weights, size):
    labels = sorted(weights)
    cum = np.cumsum([weights[z] for z in labels])
    cum[-1] = 1.0
    idx = np.searchsorted(cum, rng.random(size), side="right")
    return [labels[i] for i in idx]


def _simulate_blocks(scenario, rng, windows, arms_of, id_prefix, kind, coarsening=None):
    """Shared record generator; fixed window/arm iteration order."""
    design = scenario.design
    ids, xs, deltas, arms_col, wins, zs = [], [], [], [], [], []
    warned = False
    for w in windows:
        arms = arms_of(w)
        counts = _window_counts(scenario, rng, w, arms)
        ws, we = design.calendar_bounds[w - 1]
        seg_table = _segment_arrays(scenario, w) if scenario.kind == "survival" else None
        for arm, count in zip(arms, counts):
            if count == 0:
                continue
            enroll = rng.uniform(ws, we, size=count)
            z = _draw_z(rng, scenario.covariate_weights[w], count)
            if scenario.kind == "survival":
                e = rng.standard_exponential(count)
                mult = 1.0 - scenario.ve[arm] if arm != 0 else 1.0
                t_event = np.empty(count)
                z_arr = np.asarray(z, dtype=object)
                for lab in sorted(set(z)):
                    m = z_arr == lab
                    s0, s1, lam = seg_table[lab]
                    t_event[m] = _kernels.piecewise_exp_times(s0, s1, lam * mult, enroll[m], e[m])
                cens = np.full(count, float(design.tau))
                if scenario.loss_upper is not None:
                    cens = np.minimum(cens, rng.uniform(0.0, scenario.loss_upper, size=count))
                if scenario.admin_cutoff is not None:
                    admin = scenario.admin_cutoff - enroll
                    if np.any(admin < 0) and not warned:
                        warnings.warn(
                            f"administrative cutoff precedes window {w}; emitting fully censored records",
                            stacklevel=3,
                        )
                        warned = True
                    cens = np.minimum(cens, np.maximum(admin, 0.0))
                x = np.minimum(t_event, cens)
                delta = (t_event <= cens).astype(np.int8)
            else:
                p = scenario.p0 * (scenario.rr[arm] if arm != 0 else 1.0)
                event = rng.random(count) < p
                x = np.where(event, 0.0, float(design.tau))
                delta = event.astype(np.int8)
            ids.extend(f"{id_prefix}w{w}a{arm}r{i}" for i in range(count))
            xs.append(x)
            deltas.append(delta)
            arms_col.append(np.full(count, arm, dtype=np.int32))
            wins.append(np.full(count, w, dtype=np.int32))
            zs.extend(z)
    if not xs:
        raise EstimationError("scenario generated no records")
    if coarsening is None:
        coarsening = CoarseningMap.constant(scenario.z_labels)
    return Dataset.from_arrays(
        ids=ids,
        x=np.concatenate(xs),
        delta=np.concatenate(deltas),
        arm=np.concatenate(arms_col),
        window=np.concatenate(wins),
        z=zs,
        design=design,
        coarsening=coarsening,
        kind=kind,
    )


def simulate_platform(scenario: Scenario, seed, coarsening=None) -> Dataset:
    """One platform-trial dataset; deterministic given (scenario, seed)."""
    rng = _generator(seed)
    design = scenario.design

    def arms_of(w):
        return (0,) + design.arms_in_window(w)

    return _simulate_blocks(
        scenario, rng, range(1, design.q + 1), arms_of, "p-", "platform", coarsening
    )


def simulate_separate(scenario: Scenario, seed, coarsening=None) -> list:
    """Independent 2-arm trials matching the platform's active enrollment.

    Trial a enrolls in windows w_a only, with the same per-arm expected
    count per window as the platform and a dedicated control of equal
    size, so per-active-arm enrollment matches the platform design.
    """
    design = scenario.design
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(design.k)
    trials = []
    for a in range(1, design.k + 1):
        rng = _generator(children[a - 1])
        windows = sorted(design.window_sets[a])

        def arms_of(w, a=a):
            return (0, a)

        trials.append(
            _simulate_blocks(scenario, rng, windows, arms_of, f"s{a}-", f"separate:{a}", coarsening)
        )
    return trials


def control_share(dataset: Dataset) -> float:
    """Fraction of controls enrolled in windows where 2+ arms are active."""
    design = dataset.design
    shared_windows = [
        w for w in range(1, design.q + 1) if len(design.arms_in_window(w)) >= 2
    ]
    ctrl = dataset.arm == 0
    total = int(np.count_nonzero(ctrl))
    if total == 0:
        raise EstimationError("dataset has no control records")
    shared = int(np.count_nonzero(ctrl & dataset.window_mask(shared_windows))) if shared_windows else 0
    return shared / total


def _largest_remainder(total, capacities):
    """Integer split of `total` across slots, proportional with caps."""
    caps = np.asarray(capacities, dtype=np.float64)
    if total > caps.sum():
        raise InfeasibleError(f"cannot place {total} among capacities {capacities}")
    alloc = np.zeros(len(caps), dtype=np.int64)
    remaining = int(total)
    active = caps > 0
    # iterate because proportional quotas may exceed individual caps
    while remaining > 0:
        pool = caps[active] - alloc[active]
        quota = remaining * pool / pool.sum()
        add = np.floor(quota).astype(np.int64)
        short = remaining - int(add.sum())
        if short > 0:
            order = np.argsort(-(quota - add), kind="stable")
            add[order[:short]] += 1
        alloc[active] += np.minimum(add, pool.astype(np.int64))
        remaining = int(total - alloc.sum())
        active = (caps - alloc) > 0
        if remaining > 0 and not np.any(active):
            raise InfeasibleError(f"cannot place {total} among capacities {capacities}")
    return alloc.tolist()


def resample_shared_controls(dataset: Dataset, target_share, window_typing, rng) -> Dataset:
    """Subsample a 2-active-arm dataset to a target shared-control fraction.

    ``window_typing`` maps each window to "L" (first arm only), "H"
    (second arm only), "B_all" (both arms, keep everyone), or "B_sub"
    (both arms, subsampled 1:1:1). L and H windows keep a 1:1
    active:control allocation. The achieved shared-control count differs
    from target_share * kept controls by at most 1 participant;
    unreachable targets raise with the feasible range.
    """
    rng = _generator(rng)
    active = sorted(set(int(a) for a in np.unique(dataset.arm)) - {0})
    if len(active) != 2:
        raise DataError(f"resampling needs exactly 2 active arms, found {active}")
    lo, hi = active
    design = dataset.design
    typing = {int(w): str(kind) for w, kind in window_typing.items()}
    if set(typing) != set(range(1, design.q + 1)):
        raise DataError("window_typing must cover every window exactly")
    bad = {k for k in typing.values() if k not in ("L", "H", "B_all", "B_sub")}
    if bad:
        raise DataError(f"unknown window types {sorted(bad)}")

    def avail(w, arm):
        return np.flatnonzero((dataset.window == w) & (dataset.arm == arm))

    l_windows = sorted(w for w, k in typing.items() if k == "L")
    h_windows = sorted(w for w, k in typing.items() if k == "H")
    ball_windows = sorted(w for w, k in typing.items() if k == "B_all")
    bsub_windows = sorted(w for w, k in typing.items() if k == "B_sub")

    c_ball = sum(avail(w, 0).size for w in ball_windows)
    l_caps = [min(avail(w, lo).size, avail(w, 0).size) for w in l_windows]
    h_caps = [min(avail(w, hi).size, avail(w, 0).size) for w in h_windows]
    b_caps = [min(avail(w, lo).size, avail(w, hi).size, avail(w, 0).size) for w in bsub_windows]
    lh_max = sum(l_caps) + sum(h_caps)
    b_max = sum(b_caps)

    s = float(target_share)
    s_min = c_ball / (c_ball + lh_max) if (c_ball + lh_max) > 0 else 1.0
    if not 0 <= s <= 1:
        raise InfeasibleError(f"target share {s} outside [0, 1]", feasible_range=(s_min, 1.0))
    if c_ball + b_max == 0:
        # no both-arm windows: share is identically 0 regardless of kept counts
        if s * lh_max > 1.0:
            raise InfeasibleError(
                "no windows with both arms active: share is 0", feasible_range=(0.0, 0.0)
            )
        b_kept, lh = 0, lh_max
    elif s == 0.0:
        if c_ball > 0:
            raise InfeasibleError(
                "B_all windows force a positive share", feasible_range=(s_min, 1.0)
            )
        b_kept, lh = 0, lh_max
    elif s == 1.0:
        b_kept, lh = b_max, 0
    elif lh_max == 0:
        # every kept control sits in a both-arm window, hence is shared
        raise InfeasibleError(
            "no single-arm windows: every kept control is shared", feasible_range=(1.0, 1.0)
        )
    else:
        b_kept = b_max
        lh_exact = (c_ball + b_kept) * (1.0 - s) / s
        if lh_exact > lh_max:
            # too many shared controls even with all of L/H kept: shrink B_sub
            b_float = s * lh_max / (1.0 - s) - c_ball
            if b_float < 0:
                raise InfeasibleError(
                    f"target share {s} below the minimum attainable", feasible_range=(s_min, 1.0)
                )
            b_kept = int(math.floor(b_float))
            lh = lh_max
        else:
            lh = int(round(lh_exact))

    if lh > 0 and sum(l_caps) + sum(h_caps) > 0:
        l_total = int(round(lh * sum(l_caps) / (sum(l_caps) + sum(h_caps))))
        l_total = min(max(l_total, lh - sum(h_caps)), sum(l_caps))
        h_total = lh - l_total
    else:
        l_total = h_total = 0

    keep = []
    for w in ball_windows:
        for arm in (0, lo, hi):
            keep.append(avail(w, arm))
    for windows, caps, total, arm_active in (
        (l_windows, l_caps, l_total, lo),
        (h_windows, h_caps, h_total, hi),
    ):
        if windows:
            alloc = _largest_remainder(total, caps)
            for w, n_w in zip(windows, alloc):
                for arm in (0, arm_active):
                    pool = avail(w, arm)
                    keep.append(rng.choice(pool, size=n_w, replace=False))
    if bsub_windows:
        alloc = _largest_remainder(b_kept, b_caps)
        for w, n_w in zip(bsub_windows, alloc):
            for arm in (0, lo, hi):
                pool = avail(w, arm)
                keep.append(rng.choice(pool, size=n_w, replace=False))

    idx = np.sort(np.concatenate([k for k in keep if k.size]).astype(np.int64))
    b_windows = set(ball_windows) | set(bsub_windows)
    new_sets = dict(design.window_sets)
    new_sets[lo] = frozenset(sorted(set(l_windows) | b_windows))
    new_sets[hi] = frozenset(sorted(set(h_windows) | b_windows))
    new_design = TrialDesign(
        k=design.k,
        q=design.q,
        tau=design.tau,
        window_sets=new_sets,
        calendar_bounds=design.calendar_bounds,
    )
    return Dataset(
        dataset.ids[idx],
        dataset.x[idx],
        dataset.delta[idx],
        dataset.arm[idx],
        dataset.window[idx],
        dataset.z_codes[idx],
        dataset.z_labels,
        new_design,
        dataset.coarsening,
        kind="platform",
    )


def _cum_hazard(segments, start, stop):
    s0, s1, lam = segments
    lo = np.maximum(s0, start)
    hi = np.minimum(s1, stop)
    return float(np.sum(np.maximum(hi - lo, 0.0) * lam))


def true_event_prob(scenario: Scenario, arm, w, z, t, nodes=64) -> float:
    """P(T <= t | arm, window w, z) under the scenario's hazard law.

    Averages over enrollment uniform in the window via Gauss-Legendre
    quadrature (exact up to quadrature error when hazards vary over
    calendar time; exact for enrollment-constant hazards).
    """
    if scenario.kind == "binary":
        p = scenario.p0 * (scenario.rr[arm] if arm != 0 else 1.0)
        return p if t >= scenario.design.tau else 0.0
    mult = 1.0 - scenario.ve[arm] if arm != 0 else 1.0
    seg = _segment_arrays(scenario, w)[str(z)]
    ws, we = scenario.design.calendar_bounds[w - 1]
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    enroll = 0.5 * (we - ws) * xg + 0.5 * (we + ws)
    vals = np.array([1.0 - math.exp(-mult * _cum_hazard(seg, e, e + t)) for e in enroll])
    return float(np.sum(wg * vals) / 2.0)


def true_rr(scenario: Scenario, a, v, t) -> float:
    """Analytic relative risk targeted by the plug-in estimator.

    Mixes the per-(window, z) event probabilities over arm a's window
    set with weights proportional to enrollment size and the covariate
    law, restricted to z coarsening to v under a constant map ("all")
    or an identity map (v = z).
    """
    if scenario.kind == "binary":
        return float(scenario.rr[int(a)])
    design = scenario.design
    windows = sorted(design.window_sets[int(a)])
    num = den = mass = 0.0
    for w in windows:
        size = scenario.enrollment[w]
        for z, pz in scenario.covariate_weights[w].items():
            if v != "all" and str(z) != str(v):
                continue
            weight = size * pz
            num += weight * true_event_prob(scenario, int(a), w, z, t)
            den += weight * true_event_prob(scenario, 0, w, z, t)
            mass += weight
    if den == 0 or mass == 0:
        raise EstimationError(f"true relative risk undefined for arm {a}, v={v}")
    return num / den


@dataclass(frozen=True)
class MCSummary:
    """Aggregated Monte Carlo metrics with per-metric MC standard errors."""

    replications: int
    metrics: dict
    seeds: dict

    def mean(self, name) -> float:
        return self.metrics[name]["mean"]

    def se(self, name) -> float:
        return self.metrics[name]["se"]

    def to_json(self) -> str:
        return json.dumps(
            {"replications": self.replications, "metrics": self.metrics, "seeds": self.seeds},
            indent=2,
        )

    def to_csv(self) -> str:
        lines = ["metric,mean,mc_se"]
        for name in sorted(self.metrics):
            m = self.metrics[name]
            lines.append(f"{name},{m['mean']!r},{m['se']!r}")
        return "\n".join(lines) + "\n"


def monte_carlo(scenario: Scenario, analyze, reps, master_seed, threads=1) -> MCSummary:
    """Run `analyze(scenario, seed)` over spawned seeds and aggregate.

    Per-replication seeds are spawned up front and results land in
    pre-assigned slots, so summaries are identical for any thread count.
    `analyze` returns a flat mapping of metric name to value; metrics
    whose observed values are all 0/1 get the binomial MC-SE
    sqrt(p(1-p)/R), others the sample-mean standard error.
    """
    reps = int(reps)
    if reps < 1:
        raise EstimationError("reps must be >= 1")
    seeds = np.random.SeedSequence(master_seed).spawn(reps)
    results = [None] * reps

    def run(i):
        try:
            results[i] = dict(analyze(scenario, seeds[i]))
        except Exception as exc:
            raise EstimationError(f"replication {i} failed (seed spawn {i} of {master_seed}): {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            list(pool.map(run, range(reps)))
    else:
        for i in range(reps):
            run(i)

    names = sorted(results[0])
    metrics = {}
    for name in names:
        vals = np.array([float(r[name]) for r in results])
        mean = float(np.mean(vals))
        if reps == 1:
            se = 0.0
        elif np.all((vals == 0.0) | (vals == 1.0)):
            se = float(np.sqrt(mean * (1.0 - mean) / reps))
        else:
            se = float(np.std(vals, ddof=1) / np.sqrt(reps))
        metrics[name] = {"mean": mean, "se": se}
    return MCSummary(
        replications=reps,
        metrics=metrics,
        seeds={"master": master_seed, "algorithm": RNG_ALGORITHM, "per_rep": "seedsequence-spawn"},
    )

def _preset_table3() -> Scenario:
    """Binary two-arm design: 2% control risk, relative risks 0.35 and 0.50."""
    design = TrialDesign(
        k=2,
        q=1,
        tau=6.0,
        window_sets={1: frozenset({1}), 2: frozenset({1})},
        calendar_bounds=((0.0, 1.0),),
    )
    return Scenario(
        design=design,
        enrollment={1: 1750},
        covariate_weights={1: {"1": 1.0}},
        kind="binary",
        p0=0.02,
        rr={1: 0.35, 2: 0.5},
        name="table3",
    )


_STAGGERED_WINDOW_SETS = {
    1: {2, 4, 5},
    2: {1, 5},
    3: {1, 4, 5},
    4: {1, 2, 3},
    5: {2, 3},
    6: {2, 3, 4},
    7: {1, 2, 3, 5},
    8: {1, 4, 5},
    9: {1, 2, 3, 4},
    10: {1, 2, 3, 4, 5},
}

# 6-month control attack rate for low-risk z in {1, 2}; doubled for z in {3, 4}
_STAGGERED_AR_LOW = {1: 0.12, 2: 0.12, 3: 0.06, 4: 0.04, 5: 0.04}


def _preset_section6() -> Scenario:
    """Ten staggered arms over five windows with shifting covariate risk."""
    design = TrialDesign(
        k=10,
        q=5,
        tau=6.0,
        window_sets={a: frozenset(ws) for a, ws in _STAGGERED_WINDOW_SETS.items()},
        calendar_bounds=((0.0, 1.0), (1.0, 1.5), (1.5, 2.0), (2.0, 2.5), (2.5, 3.0)),
    )
    early = {"1": 0.1, "2": 0.2, "3": 0.3, "4": 0.4}
    late = {"1": 0.4, "2": 0.3, "3": 0.2, "4": 0.1}
    hazards = {}
    for w, ar in _STAGGERED_AR_LOW.items():
        lam_lo = attack_rate_to_hazard(ar, 6.0)
        lam_hi = attack_rate_to_hazard(2.0 * ar, 6.0)
        hazards[w] = {
            "1": [(0.0, OPEN_END, lam_lo)],
            "2": [(0.0, OPEN_END, lam_lo)],
            "3": [(0.0, OPEN_END, lam_hi)],
            "4": [(0.0, OPEN_END, lam_hi)],
        }
    return Scenario(
        design=design,
        enrollment={1: 1000, 2: 900, 3: 1200, 4: 1400, 5: 1000},
        covariate_weights={1: early, 2: early, 3: late, 4: late, 5: late},
        ve={1: 0.0, 2: 0.1, 3: 0.2, 4: 0.3, 5: 0.4, 6: 0.5, 7: 0.6, 8: 0.6, 9: 0.7, 10: 0.7},
        control_hazards=hazards,
        loss_upper=120.0,
        admin_cutoff=18.0,
        name="section6",
    )


def _preset_appendix_f() -> Scenario:
    """Two concurrent arms over four windows, sized for control resampling."""
    design = TrialDesign(
        k=2,
        q=4,
        tau=6.0,
        window_sets={1: frozenset({1, 2, 3, 4}), 2: frozenset({1, 2, 3, 4})},
        calendar_bounds=((0.0, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 4.0)),
    )
    lam = attack_rate_to_hazard(0.04, 6.0)
    return Scenario(
        design=design,
        enrollment={w: 120 for w in range(1, 5)},
        covariate_weights={w: {"1": 1.0} for w in range(1, 5)},
        ve={1: 0.1, 2: 0.3},
        control_hazards={w: {"1": [(0.0, OPEN_END, lam)]} for w in range(1, 5)},
        loss_upper=120.0,
        admin_cutoff=12.0,
        name="appendixF",
    )


_PRESET_BUILDERS = {
    "table3": _preset_table3,
    "section6": _preset_section6,
    "appendixF": _preset_appendix_f,
}


def load_preset(name: str) -> Scenario:
    """Load a shipped scenario data file by name."""
    if name not in _PRESET_BUILDERS:
        raise DataError(f"unknown preset {name!r}; available: {sorted(_PRESET_BUILDERS)}")
    path = resources.files("platformrr") / "presets" / f"{name}.json"
    return Scenario.from_json(path.read_text(encoding="utf-8"))
