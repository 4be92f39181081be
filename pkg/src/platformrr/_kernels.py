"""Numerical kernels with a numba fast path and a pure-numpy fallback.

Backend selection reads the environment once at import:

    PLATFORMRR_USE_NUMBA=1   force the numba backend (ImportError if absent)
    PLATFORMRR_USE_NUMBA=0   force the numpy backend
    unset / "auto"           numba when importable, numpy otherwise

Both backends implement identical math. Within one backend, results are
bit-reproducible regardless of worker thread counts: every kernel reduces
in a fixed serial order (numba) or via numpy's deterministic pairwise
reduction, and nothing here dispatches to threaded BLAS.

``backend()`` reports which path is live; ``implementations()`` exposes
both for benchmarking.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["backend", "implementations", "f_lambda_batch", "pair_product_sums", "piecewise_exp_times"]


def _f_lambda_np(x, delta, in_stratum, t, event_times, inv_p2, cum_f):
    """Per-record CHF influence values for one stratum at time t.

    f(i) = 1(x_i <= t, delta_i = 1)/p2(x_i) - cumF(min(t, x_i)) for records
    in the stratum, 0 otherwise. ``inv_p2[j]`` is 1/p2 at event time j;
    ``cum_f[j]`` is the running sum of dp1/p2^2 through event time j.
    """
    out = np.zeros(x.shape[0])
    if event_times.size == 0:
        return out
    stratum = in_stratum.astype(bool)
    ev = stratum & (delta == 1) & (x <= t)
    idx = np.searchsorted(event_times, x[ev])
    out[ev] = inv_p2[idx]
    r = np.minimum(x[stratum], t)
    pos = np.searchsorted(event_times, r, side="right") - 1
    corr = np.where(pos >= 0, cum_f[np.maximum(pos, 0)], 0.0)
    out[stratum] -= corr
    return out


def _pair_np(F):
    """F^T F accumulated pairwise per column pair; exactly symmetric."""
    k = F.shape[1]
    out = np.zeros((k, k))
    for a in range(k):
        for b in range(a, k):
            s = float(np.add.reduce(F[:, a] * F[:, b]))
            out[a, b] = s
            out[b, a] = s
    return out


def _pwexp_np(seg_start, seg_end, seg_lam, enroll, e):
    """Inverse-transform piecewise-exponential event times.

    Walks calendar segments from each enrollment time accumulating
    hazard; returns time since enrollment, +inf past the last segment.
    """
    n = enroll.shape[0]
    out = np.full(n, np.inf)
    rem = e.astype(np.float64).copy()
    active = np.ones(n, dtype=bool)
    for j in range(seg_start.shape[0]):
        lo = np.maximum(enroll, seg_start[j])
        dur = np.maximum(seg_end[j] - lo, 0.0)
        lam = seg_lam[j]
        hz = lam * dur
        cross = active & (hz > 0.0) & (rem <= hz)
        out[cross] = lo[cross] + rem[cross] / lam - enroll[cross]
        active &= ~cross
        rem[active] -= hz[active]
    return out


def _build_numba():
    from numba import njit

    @njit(cache=True)
    def f_lambda_nb(x, delta, in_stratum, t, event_times, inv_p2, cum_f):
        n = x.shape[0]
        out = np.zeros(n)
        m = event_times.shape[0]
        if m == 0:
            return out
        for i in range(n):
            if in_stratum[i] == 0:
                continue
            val = 0.0
            if delta[i] == 1 and x[i] <= t:
                val += inv_p2[np.searchsorted(event_times, x[i])]
            r = min(x[i], t)
            pos = np.searchsorted(event_times, r, side="right") - 1
            if pos >= 0:
                val -= cum_f[pos]
            out[i] = val
        return out

    @njit(cache=True)
    def pair_nb(F):
        n, k = F.shape
        out = np.zeros((k, k))
        for a in range(k):
            for b in range(a, k):
                s = 0.0
                for i in range(n):
                    s += F[i, a] * F[i, b]
                out[a, b] = s
                out[b, a] = s
        return out

    @njit(cache=True)
    def pwexp_nb(seg_start, seg_end, seg_lam, enroll, e):
        n = enroll.shape[0]
        out = np.empty(n)
        m = seg_start.shape[0]
        for i in range(n):
            rem = e[i]
            res = np.inf
            for j in range(m):
                lo = max(enroll[i], seg_start[j])
                dur = seg_end[j] - lo
                if dur <= 0.0:
                    continue
                hz = seg_lam[j] * dur
                if hz > 0.0 and rem <= hz:
                    res = lo + rem / seg_lam[j] - enroll[i]
                    break
                rem -= hz
            out[i] = res
        return out

    return f_lambda_nb, pair_nb, pwexp_nb


def _select_backend():
    flag = os.environ.get("PLATFORMRR_USE_NUMBA", "auto").strip().lower()
    if flag in ("0", "false", "no", "numpy"):
        return "numpy", None
    if flag in ("1", "true", "yes", "numba"):
        return "numba", _build_numba()
    try:
        return "numba", _build_numba()
    except ImportError:
        return "numpy", None


_BACKEND, _nb = _select_backend()

if _BACKEND == "numba":
    f_lambda_batch, pair_product_sums, piecewise_exp_times = _nb
else:
    f_lambda_batch, pair_product_sums, piecewise_exp_times = _f_lambda_np, _pair_np, _pwexp_np


def backend() -> str:
    """Name of the live kernel backend: "numba" or "numpy"."""
    return _BACKEND


def implementations() -> dict:
    """Both backends' kernel triples, keyed by name, for benchmarks."""
    table = {"numpy": (_f_lambda_np, _pair_np, _pwexp_np)}
    try:
        table["numba"] = _nb if _nb is not None else _build_numba()
    except ImportError:
        pass
    return table
