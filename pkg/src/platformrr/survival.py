"""Stratified survival estimation and plug-in relative risks.

All estimators stratify on (arm, window set, z). Within a stratum the
counting processes are

    N_n(t) = (1/n) #{i : x_i <= t, delta_i = 1, i in stratum}
    Y_n(t) = (1/n) #{i : x_i >= t, i in stratum}

with n the full dataset size. The cumulative hazard estimate jumps by
dN/Y at each observed event time; survival is exp(-chf) for the
Nelson-Aalen flavor and the product limit prod(1 - dN/Y) for the
Kaplan-Meier flavor. Ties are resolved events-first: Y_n counts x >= t,
so a record censored at an event time still sits in the risk set there.

The plug-in relative risk mixes stratum survival over the empirical
covariate law within a coarsened stratum v:

    gamma_n(t|a,v) = [1 - sum_z S_n(t|a,w_a,z) P_n(z|w_a,v)]
                   / [1 - sum_z S_n(t|0,w_a,z) P_n(z|w_a,v)]

with the sum over z mapping to v under the coarsening.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import EstimationError

__all__ = [
    "StratifiedCurve",
    "CovariateDist",
    "RREstimate",
    "counting_processes",
    "nelson_aalen",
    "kaplan_meier",
    "covariate_dist",
    "mixture_incidence",
    "relative_risk",
    "chf_ratio",
]


@dataclass(frozen=True)
class StratifiedCurve:
    """Right-continuous step estimates on one (arm, window set, z) stratum.

    Arrays are indexed by distinct observed event times in increasing
    order; values hold right after each event time. Before the first
    event the curve sits at chf 0, survival 1. ``kind`` is "na"
    (survival = exp(-chf)) or "km" (product limit; chf = -log survival,
    +inf once survival hits 0).
    """

    stratum: tuple
    event_times: np.ndarray
    jumps: np.ndarray
    chf: np.ndarray
    survival: np.ndarray
    n_risk: np.ndarray
    n_event: np.ndarray
    n_stratum: int
    n_total: int
    last_observed: float
    kind: str

    def _index(self, t) -> int:
        # rightmost event time <= t; -1 means before the first event
        return int(np.searchsorted(self.event_times, t, side="right")) - 1

    def chf_at(self, t) -> float:
        i = self._index(t)
        return float(self.chf[i]) if i >= 0 else 0.0

    def surv_at(self, t) -> float:
        i = self._index(t)
        return float(self.survival[i]) if i >= 0 else 1.0

    def risk_at(self, t) -> float:
        """Y_n(t), the at-risk fraction of the full dataset."""
        xs = self._x_sorted
        return (self.n_stratum - np.searchsorted(xs, t, side="left")) / self.n_total

    def truncated(self, t) -> bool:
        """Whether t lies beyond every observation in the stratum."""
        return t > self.last_observed

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,chf,survival,risk\n")
        for i, t in enumerate(self.event_times):
            buf.write(f"{t!r},{self.chf[i]!r},{self.survival[i]!r},{self.n_risk[i] / self.n_total!r}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class CovariateDist:
    """Empirical law of z among records with W in the window set and V = v."""

    windows: tuple
    v: str
    weights: dict
    mass: float

    def weight(self, z_label) -> float:
        return self.weights.get(str(z_label), 0.0)


@dataclass(frozen=True)
class RREstimate:
    """Plug-in relative risk gamma_n(t|a,v) with its two mixture incidences."""

    value: float
    t: float
    arm: int
    v: str
    numerator: float
    denominator: float


def _stratum_mask(dataset, a, windows, z_label):
    mask = dataset.arm == a
    if windows is not None:
        mask = mask & dataset.window_mask(windows)
    if z_label is not None:
        mask = mask & (dataset.z_codes == dataset.z_code(z_label))
    return mask


def _windows_key(windows):
    return None if windows is None else tuple(sorted(int(w) for w in windows))


def counting_processes(dataset: Dataset, a, windows, z_label):
    """Step functions (N_n, Y_n) for one stratum, as callables of t."""
    mask = _stratum_mask(dataset, a, windows, z_label)
    if not np.any(mask):
        raise EstimationError(f"empty stratum (arm={a}, windows={_windows_key(windows)}, z={z_label})")
    x = np.sort(dataset.x[mask])
    xe = np.sort(dataset.x[mask & (dataset.delta == 1)])
    n = dataset.n

    def n_fn(t):
        return np.searchsorted(xe, t, side="right") / n

    def y_fn(t):
        return (x.size - np.searchsorted(x, t, side="left")) / n

    return n_fn, y_fn


def _fit_curve(dataset, a, windows, z_label, kind) -> StratifiedCurve:
    mask = _stratum_mask(dataset, a, windows, z_label)
    m = int(np.count_nonzero(mask))
    if m == 0:
        raise EstimationError(f"empty stratum (arm={a}, windows={_windows_key(windows)}, z={z_label})")
    x = dataset.x[mask]
    delta = dataset.delta[mask]
    x_sorted = np.sort(x)
    times, d = np.unique(x[delta == 1], return_counts=True)
    at_risk = m - np.searchsorted(x_sorted, times, side="left")
    jumps = d / at_risk
    if kind == "na":
        chf = np.cumsum(jumps)
        surv = np.exp(-chf)
    else:
        surv = np.cumprod(1.0 - jumps)
        with np.errstate(divide="ignore"):
            chf = np.where(surv > 0, -np.log(np.maximum(surv, 1e-300)), np.inf)
    curve = StratifiedCurve(
        stratum=(a, _windows_key(windows), z_label),
        event_times=times,
        jumps=jumps,
        chf=chf,
        survival=surv,
        n_risk=at_risk,
        n_event=d,
        n_stratum=m,
        n_total=dataset.n,
        last_observed=float(x_sorted[-1]),
        kind=kind,
    )
    object.__setattr__(curve, "_x_sorted", x_sorted)
    return curve


def _cached_curve(dataset, a, windows, z_label, kind) -> StratifiedCurve:
    cache = dataset.__dict__.setdefault("_curve_cache", {})
    key = (kind, a, _windows_key(windows), z_label)
    curve = cache.get(key)
    if curve is None:
        curve = cache[key] = _fit_curve(dataset, a, windows, z_label, kind)
    return curve


def nelson_aalen(dataset: Dataset, a, windows, z_label) -> StratifiedCurve:
    """Conditional Nelson-Aalen curve on the (a, windows, z) stratum."""
    return _cached_curve(dataset, a, windows, z_label, "na")


def kaplan_meier(dataset: Dataset, a, z_label, windows=None) -> StratifiedCurve:
    """Stratified product-limit curve; windows=None pools all windows."""
    return _cached_curve(dataset, a, windows, z_label, "km")


def covariate_dist(dataset: Dataset, windows, v) -> CovariateDist:
    """Empirical P_n(z|windows, v) with context mass P_n(windows, v)."""
    vmask = dataset.v_codes == dataset.v_code(v)
    mask = vmask if windows is None else (vmask & dataset.window_mask(windows))
    total = int(np.count_nonzero(mask))
    if total == 0:
        raise EstimationError(f"no records with windows={_windows_key(windows)} and v={v}")
    weights = {}
    for zc in np.unique(dataset.z_codes[mask]):
        weights[dataset.z_labels[zc]] = int(np.count_nonzero(mask & (dataset.z_codes == zc))) / total
    return CovariateDist(
        windows=_windows_key(windows),
        v=str(v),
        weights=weights,
        mass=total / dataset.n,
    )


def mixture_incidence(dataset: Dataset, t, a, windows, v, survival="na") -> float:
    """1 - sum_z S_n(t|a,windows,z) P_n(z|windows,v) over z coarsening to v."""
    dist = covariate_dist(dataset, windows, v)
    total = 0.0
    for z_label, w in sorted(dist.weights.items()):
        curve = _cached_curve(dataset, a, windows, z_label, survival)
        total += w * curve.surv_at(t)
    return 1.0 - total


def relative_risk(dataset: Dataset, a, v, t, survival="na", windows="design") -> RREstimate:
    """Plug-in gamma_n(t|a,v).

    windows="design" stratifies on arm a's design window set (the
    platform estimator); windows=None pools all windows (the separate
    trial estimator, typically with survival="km"); an iterable selects
    an explicit set.
    """
    if isinstance(windows, str) and windows == "design":
        windows = dataset.design.window_sets[a]
    num = mixture_incidence(dataset, t, a, windows, v, survival)
    den = mixture_incidence(dataset, t, 0, windows, v, survival)
    if den <= 0.0:
        raise EstimationError(f"no control events by t={t} in windows={_windows_key(windows)}, v={v}")
    return RREstimate(value=num / den, t=float(t), arm=int(a), v=str(v), numerator=num, denominator=den)


def chf_ratio(dataset: Dataset, a, z_label, t) -> float:
    """Lambda_n(t|a,w_a,z) / Lambda_n(t|0,w_a,z)."""
    windows = dataset.design.window_sets[a]
    den = nelson_aalen(dataset, 0, windows, z_label).chf_at(t)
    if den == 0.0:
        raise EstimationError(f"control cumulative hazard is 0 at t={t} for z={z_label}")
    return nelson_aalen(dataset, a, windows, z_label).chf_at(t) / den
