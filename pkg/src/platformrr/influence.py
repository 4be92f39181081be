"""Influence-function evaluation and joint covariance of relative risks.

Each estimator here is asymptotically linear: estimator minus estimand
behaves like the sample mean of a mean-zero influence value per record.
Evaluating the influence functions at every record with plug-in
empirical nuisances and averaging cross-products yields joint
covariance estimates for the relative risks of several arms that share
control participants.

With gamma_n(t|a,v) = N_a/D_a (intervention and control mixture
incidences over arm a's window set), the relative-risk influence value
at record u is

    f_gamma(u) = Q0_a * sum_z { -P(z) xi_a(u,z) + [1-S_a(z)] h(u,z)
                 - gamma_n * ( -P(z) xi_0(u,z) + [1-S_0(z)] h(u,z) ) }

where Q0_a = 1/D_a, xi = -S * f_lambda is the survival influence, and h
is the covariate-weight influence. f_phi = f_gamma/gamma_n targets the
log relative risk. Covariances use divisor n, matching the asymptotic
formula; the n vs n-1 gap is immaterial at trial sizes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import Dataset, ParticipantRecord
from .errors import DataError, EstimationError
from .survival import covariate_dist, relative_risk, _cached_curve, _windows_key

__all__ = [
    "PluginContext",
    "JointRREstimate",
    "build_context",
    "eval_f_lambda",
    "eval_xi",
    "eval_h",
    "eval_f_gamma",
    "eval_f_phi",
    "covariance_rr",
    "chf_ratio_variance",
]


@dataclass(frozen=True)
class _StratumTable:
    """Per-stratum pieces of f_lambda, independent of the evaluation time.

    inv_p2[j] = 1/p2 at event time j; cum_f[j] = running sum of
    dp1/p2^2 through event time j; in_stratum marks the dataset records
    belonging to the stratum.
    """

    event_times: np.ndarray
    inv_p2: np.ndarray
    cum_f: np.ndarray
    in_stratum: np.ndarray
    n_total: int


class PluginContext:
    """Shared empirical nuisances for influence evaluation at one (t, v).

    Holds, per requested arm: the window set, covariate weights
    P_n(z|w_a,v), stratum survival values at t for the arm and control
    sides, the plug-in relative risk, and Q0 = 1/(control mixture
    incidence). Read-only after construction; safe to share.
    """

    def __init__(self, dataset: Dataset, arms, v, t, survival="na", windows="design"):
        self.dataset = dataset
        self.arms = tuple(int(a) for a in arms)
        self.v = str(v)
        self.t = float(t)
        self.survival = survival
        self._tables = {}
        self.windows = {}
        self.dist = {}
        self.rr = {}
        self.q0 = {}
        self.s_arm = {}
        self.s_ctrl = {}
        use_design = isinstance(windows, str) and windows == "design"
        if use_design:
            missing = [a for a in self.arms if a not in dataset.design.window_sets]
            if missing:
                raise DataError(f"arms {missing} not in the design window map")
        for a in self.arms:
            w = dataset.design.window_sets[a] if use_design else windows
            self.windows[a] = w
            try:
                self.rr[a] = relative_risk(dataset, a, v, t, survival=survival, windows=w)
            except EstimationError as exc:
                raise EstimationError(f"relative risk undefined for arm {a}: {exc}") from exc
            self.dist[a] = covariate_dist(dataset, w, v)
            self.q0[a] = 1.0 / self.rr[a].denominator
            self.s_arm[a] = {}
            self.s_ctrl[a] = {}
            for z in sorted(self.dist[a].weights):
                self.s_arm[a][z] = _cached_curve(dataset, a, w, z, survival).surv_at(t)
                self.s_ctrl[a][z] = _cached_curve(dataset, 0, w, z, survival).surv_at(t)

    def stratum_table(self, a, windows, z_label) -> _StratumTable:
        key = (int(a), _windows_key(windows), str(z_label))
        tbl = self._tables.get(key)
        if tbl is None:
            ds = self.dataset
            curve = _cached_curve(ds, a, windows, z_label, "na")
            mask = (ds.arm == a) & (ds.z_codes == ds.z_code(z_label))
            if windows is not None:
                mask = mask & ds.window_mask(windows)
            tbl = _StratumTable(
                event_times=np.ascontiguousarray(curve.event_times),
                inv_p2=np.ascontiguousarray(ds.n / curve.n_risk),
                cum_f=np.ascontiguousarray(np.cumsum(ds.n * curve.n_event / curve.n_risk**2)),
                in_stratum=np.ascontiguousarray(mask.astype(np.int8)),
                n_total=ds.n,
            )
            self._tables[key] = tbl
        return tbl

    def _coerce(self, record) -> ParticipantRecord:
        if isinstance(record, ParticipantRecord):
            return record
        i = int(record)
        ds = self.dataset
        z = ds.z_labels[ds.z_codes[i]]
        return ParticipantRecord(
            id=str(ds.ids[i]),
            x=float(ds.x[i]),
            delta=int(ds.delta[i]),
            arm=int(ds.arm[i]),
            window=int(ds.window[i]),
            z=z,
            v=ds.coarsening(z),
        )


def build_context(dataset: Dataset, arms, v, t, survival="na", windows="design") -> PluginContext:
    return PluginContext(dataset, arms, v, t, survival=survival, windows=windows)


def eval_f_lambda(record, t, a, windows, z_label, ctx: PluginContext) -> float:
    """CHF influence value of one record for stratum (a, windows, z) at t.

    Records outside the stratum contribute 0. The record need not belong
    to the dataset; hypothetical records are evaluated against the same
    empirical nuisances.
    """
    rec = ctx._coerce(record)
    in_windows = windows is None or rec.window in set(windows)
    if not (rec.arm == int(a) and in_windows and rec.z == str(z_label)):
        return 0.0
    tbl = ctx.stratum_table(a, windows, z_label)
    if tbl.event_times.size == 0:
        return 0.0
    val = 0.0
    if rec.delta == 1 and rec.x <= t:
        j = int(np.searchsorted(tbl.event_times, rec.x))
        if j < tbl.event_times.size and tbl.event_times[j] == rec.x:
            val += tbl.inv_p2[j]
        else:
            # hypothetical event time between observed ones: p2 from raw counts
            curve = _cached_curve(ctx.dataset, a, windows, z_label, "na")
            val += 1.0 / curve.risk_at(rec.x)
    pos = int(np.searchsorted(tbl.event_times, min(rec.x, t), side="right")) - 1
    if pos >= 0:
        val -= tbl.cum_f[pos]
    return float(val)


def eval_xi(record, t, a, windows, z_label, ctx: PluginContext) -> float:
    """Survival influence: -S_n(t|a,windows,z) * f_lambda."""
    s = _cached_curve(ctx.dataset, a, windows, z_label, ctx.survival).surv_at(t)
    return -s * eval_f_lambda(record, t, a, windows, z_label, ctx)


def eval_h(record, windows, z_label, v, ctx: PluginContext) -> float:
    """Covariate-weight influence for P_n(z|windows, v)."""
    rec = ctx._coerce(record)
    dist = covariate_dist(ctx.dataset, windows, v)
    in_windows = windows is None or rec.window in set(windows)
    if not (in_windows and rec.v == str(v)):
        return 0.0
    return (float(rec.z == str(z_label)) - dist.weight(z_label)) / dist.mass


def eval_f_gamma(record, t, a, v, ctx: PluginContext) -> float:
    """Relative-risk influence value of one record for arm a at (t, v)."""
    a = int(a)
    w = ctx.windows[a]
    gamma = ctx.rr[a].value
    acc = 0.0
    for z in sorted(ctx.dist[a].weights):
        pz = ctx.dist[a].weights[z]
        h = eval_h(record, w, z, v, ctx)
        xi_a = eval_xi(record, t, a, w, z, ctx)
        xi_0 = eval_xi(record, t, 0, w, z, ctx)
        acc += -pz * xi_a + (1.0 - ctx.s_arm[a][z]) * h
        acc -= gamma * (-pz * xi_0 + (1.0 - ctx.s_ctrl[a][z]) * h)
    return ctx.q0[a] * acc


def eval_f_phi(record, t, a, v, ctx: PluginContext) -> float:
    """Log relative-risk influence: f_gamma / gamma_n."""
    return eval_f_gamma(record, t, a, v, ctx) / ctx.rr[int(a)].value


def f_gamma_matrix(ctx: PluginContext) -> np.ndarray:
    """(n, k) matrix of f_gamma values for every record and requested arm."""
    ds = ctx.dataset
    n = ds.n
    out = np.zeros((n, len(ctx.arms)))
    t = ctx.t
    for col, a in enumerate(ctx.arms):
        w = ctx.windows[a]
        gamma = ctx.rr[a].value
        dist = ctx.dist[a]
        vmask = ds.v_codes == ds.v_code(ctx.v)
        ctx_mask = (vmask if w is None else vmask & ds.window_mask(w)).astype(np.float64)
        acc = np.zeros(n)
        for z in sorted(dist.weights):
            pz = dist.weights[z]
            zc = ds.z_code(z)
            h = ctx_mask * ((ds.z_codes == zc).astype(np.float64) - pz) / dist.mass
            ta = ctx.stratum_table(a, w, z)
            t0 = ctx.stratum_table(0, w, z)
            fl_a = _kernels.f_lambda_batch(ds.x, ds.delta, ta.in_stratum, t, ta.event_times, ta.inv_p2, ta.cum_f)
            fl_0 = _kernels.f_lambda_batch(ds.x, ds.delta, t0.in_stratum, t, t0.event_times, t0.inv_p2, t0.cum_f)
            xi_a = -ctx.s_arm[a][z] * fl_a
            xi_0 = -ctx.s_ctrl[a][z] * fl_0
            acc += -pz * xi_a + (1.0 - ctx.s_arm[a][z]) * h
            acc -= gamma * (-pz * xi_0 + (1.0 - ctx.s_ctrl[a][z]) * h)
        out[:, col] = ctx.q0[a] * acc
    return out


@dataclass(frozen=True)
class JointRREstimate:
    """Joint relative-risk estimate across arms sharing controls.

    sigma_gamma and sigma_phi estimate the asymptotic covariance of
    sqrt(n)(gamma_n - gamma) and of the log version; the standard error
    of gamma_n(t|a,v) is sqrt(sigma_gamma[a,a]/n).
    """

    t: float
    v: str
    arms: tuple
    gamma: np.ndarray
    sigma_gamma: np.ndarray
    sigma_phi: np.ndarray
    n: int

    def arm_index(self, a) -> int:
        try:
            return self.arms.index(int(a))
        except ValueError:
            raise EstimationError(f"arm {a} not in estimate (arms={self.arms})") from None

    def se(self, a) -> float:
        i = self.arm_index(a)
        return float(np.sqrt(self.sigma_gamma[i, i] / self.n))

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": self.t,
                "v": self.v,
                "arms": list(self.arms),
                "gamma": self.gamma.tolist(),
                "sigma_gamma": self.sigma_gamma.tolist(),
                "sigma_phi": self.sigma_phi.tolist(),
                "n": self.n,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "JointRREstimate":
        obj = json.loads(text)
        return cls(
            t=float(obj["t"]),
            v=str(obj["v"]),
            arms=tuple(int(a) for a in obj["arms"]),
            gamma=np.asarray(obj["gamma"], dtype=np.float64),
            sigma_gamma=np.asarray(obj["sigma_gamma"], dtype=np.float64),
            sigma_phi=np.asarray(obj["sigma_phi"], dtype=np.float64),
            n=int(obj["n"]),
        )


def covariance_rr(dataset: Dataset, arms, v, t, survival="na", windows="design") -> JointRREstimate:
    """Joint gamma vector and covariance estimates at (t, v).

    sigma_gamma[a,b] = (1/n) sum_i f_gamma(U_i|a) f_gamma(U_i|b), reduced
    in a fixed order so results do not depend on worker thread counts.
    """
    ctx = build_context(dataset, arms, v, t, survival=survival, windows=windows)
    F = f_gamma_matrix(ctx)
    n = dataset.n
    sigma_gamma = _kernels.pair_product_sums(F) / n
    gamma = np.array([ctx.rr[a].value for a in ctx.arms])
    outer = np.outer(gamma, gamma)
    if np.any(gamma == 0.0):
        raise EstimationError("log relative risk undefined: some gamma_n is 0")
    sigma_phi = sigma_gamma / outer
    return JointRREstimate(
        t=float(t),
        v=str(v),
        arms=ctx.arms,
        gamma=gamma,
        sigma_gamma=sigma_gamma,
        sigma_phi=sigma_phi,
        n=n,
    )


def chf_ratio_variance(dataset: Dataset, a, z_label, t):
    """Experimental: delta-method variance of the stratified CHF ratio.

    Returns (ratio, variance of the ratio estimator). The downstream
    pipeline does not consume this; it is exposed for completeness and
    its estimator has seen less validation than covariance_rr.
    """
    w = dataset.design.window_sets[int(a)]
    num = _cached_curve(dataset, a, w, z_label, "na").chf_at(t)
    den = _cached_curve(dataset, 0, w, z_label, "na").chf_at(t)
    if den == 0.0:
        raise EstimationError(f"control cumulative hazard is 0 at t={t} for z={z_label}")
    ratio = num / den
    ctx = build_context(dataset, [a], dataset.coarsening(str(z_label)), t)
    ta = ctx.stratum_table(a, w, z_label)
    t0 = ctx.stratum_table(0, w, z_label)
    fl_a = _kernels.f_lambda_batch(dataset.x, dataset.delta, ta.in_stratum, t, ta.event_times, ta.inv_p2, ta.cum_f)
    fl_0 = _kernels.f_lambda_batch(dataset.x, dataset.delta, t0.in_stratum, t, t0.event_times, t0.inv_p2, t0.cum_f)
    infl = (fl_a - ratio * fl_0) / den
    var = float(np.add.reduce(infl * infl)) / dataset.n**2
    return ratio, var
