"""Adaptive noninferiority tests against the best unknown comparator.

The composite null for candidate arm 1 with efficacy threshold delta and
margin epsilon is

    H0: gamma(1) >= delta  OR  gamma(1) >= gamma(a) + epsilon for some a.

Two tests are provided. The intersection test runs one marginal Wald
test per component (each at level alpha, one-sided via the upper bound
of a two-sided 100(1-2 alpha)% interval) and rejects only if every
marginal rejects; this controls type I error at alpha without any
multiplicity adjustment because the null is a union. The
likelihood-ratio-type test measures the Mahalanobis distance from the
estimated vector to the null region Gamma0 (the union of k convex
pieces intersected with the nonnegative orthant) and rejects when it
exceeds a chi-square(k) quantile, which is conservative.

Each convex piece is a quadratic program with one affine inequality
plus nonnegativity bounds; ``constrained_gaussian_mle`` solves it
exactly by enumerating KKT active sets, so the statistic is
deterministic and solver-free.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import chi2

from .errors import EstimationError
from .influence import JointRREstimate

__all__ = [
    "NITestConfig",
    "TestOutcome",
    "intersection_test",
    "constrained_gaussian_mle",
    "lrt_test",
]


@dataclass(frozen=True)
class NITestConfig:
    """Configuration of a noninferiority test at one (t, v)."""

    ref_arm: int
    delta: float
    epsilon: float
    alpha: float
    t: float
    v: str

    def __post_init__(self):
        if not self.delta > 0:
            raise EstimationError("delta must be positive")
        if not self.epsilon > 0:
            raise EstimationError("epsilon must be positive")
        if not 0 < self.alpha < 0.5:
            raise EstimationError("alpha must lie in (0, 0.5)")


@dataclass(frozen=True)
class TestOutcome:
    """Decision plus per-marginal (or per-piece) audit artifacts."""

    reject: bool
    method: str
    config: NITestConfig
    marginals: list = field(default_factory=list)
    statistic: float = float("nan")
    threshold: float = float("nan")

    def to_json(self) -> str:
        return json.dumps(
            {
                "reject": bool(self.reject),
                "method": self.method,
                "statistic": None if np.isnan(self.statistic) else self.statistic,
                "threshold": None if np.isnan(self.threshold) else self.threshold,
                "marginals": self.marginals,
                "config": {
                    "ref_arm": self.config.ref_arm,
                    "delta": self.config.delta,
                    "epsilon": self.config.epsilon,
                    "alpha": self.config.alpha,
                    "t": self.config.t,
                    "v": self.config.v,
                },
            },
            indent=2,
        )


def intersection_test(est: JointRREstimate, cfg: NITestConfig) -> TestOutcome:
    """Reject the composite null iff every marginal Wald test rejects.

    The efficacy marginal rejects when the upper confidence bound for
    gamma(ref) falls below delta; each comparator marginal rejects when
    the upper bound for gamma(ref) - gamma(a), with the shared-control
    cross term in its variance, falls below epsilon.
    """
    ref = int(cfg.ref_arm)
    i = est.arm_index(ref)
    z = float(ndtri(1.0 - cfg.alpha))
    n = est.n
    marginals = []

    se_ref = float(np.sqrt(est.sigma_gamma[i, i] / n))
    ub = float(est.gamma[i] + z * se_ref)
    marginals.append(
        {
            "null": f"gamma({ref}) >= delta",
            "estimate": float(est.gamma[i]),
            "upper": ub,
            "threshold": cfg.delta,
            "reject": bool(ub < cfg.delta),
        }
    )

    for a in est.arms:
        if a == ref:
            continue
        j = est.arm_index(a)
        diff = float(est.gamma[i] - est.gamma[j])
        var = est.sigma_gamma[i, i] + est.sigma_gamma[j, j] - 2.0 * est.sigma_gamma[i, j]
        if not np.isfinite(var):
            raise EstimationError(f"missing covariance for arms ({ref}, {a})")
        ub = float(diff + z * np.sqrt(max(var, 0.0) / n))
        marginals.append(
            {
                "null": f"gamma({ref}) >= gamma({a}) + epsilon",
                "estimate": diff,
                "upper": ub,
                "threshold": cfg.epsilon,
                "reject": bool(ub < cfg.epsilon),
            }
        )

    return TestOutcome(
        reject=all(m["reject"] for m in marginals),
        method="intersection",
        config=cfg,
        marginals=marginals,
    )


def _ensure_pd(cov):
    cov = np.asarray(cov, dtype=np.float64)
    tr = float(np.trace(cov))
    try:
        eigmin = float(np.linalg.eigvalsh(cov)[0])
    except np.linalg.LinAlgError as exc:
        raise EstimationError("covariance matrix is not diagonalizable") from exc
    if eigmin <= 1e-12 * max(tr, 1e-300):
        warnings.warn("covariance nearly singular; regularized by 1e-10*trace*I", stacklevel=3)
        cov = cov + 1e-10 * tr * np.eye(cov.shape[0])
        if np.linalg.eigvalsh(cov)[0] <= 0:
            raise EstimationError("covariance singular even after regularization")
    return cov


def constrained_gaussian_mle(gamma_n, cov, constraint_vec, constraint_bound):
    """Project gamma_n onto one convex null piece in the cov metric.

    Minimizes (gamma_n - g)^T cov^{-1} (gamma_n - g) over
    {g : c. g >= b, g >= 0}, where ``cov`` is the covariance of the
    estimate itself (so the objective is the chi-square-scale
    statistic). Exact solution by KKT active-set enumeration: with d
    variables there are d+1 inequality constraints, and the optimum
    satisfies stationarity with some subset held at equality. The
    objective is strictly convex, so the first active set whose
    multipliers are nonnegative and whose solution is primal feasible
    is the global optimum; subsets are scanned smallest first.

    Returns (g_star, objective).
    """
    gamma_n = np.asarray(gamma_n, dtype=np.float64)
    d = gamma_n.shape[0]
    cov = _ensure_pd(cov)
    c = np.asarray(constraint_vec, dtype=np.float64)
    A = np.vstack([c] + [np.eye(d)[i] for i in range(d)])
    b = np.asarray([float(constraint_bound)] + [0.0] * d)

    resid = b - A @ gamma_n
    tol = 1e-9 * (1.0 + float(np.max(np.abs(b))) + float(np.max(np.abs(gamma_n))))
    if np.all(resid <= tol):
        return gamma_n.copy(), 0.0

    gram = A @ cov @ A.T
    cov_at = cov @ A.T
    for r in range(1, d + 2):
        for S in itertools.combinations(range(d + 1), r):
            idx = list(S)
            try:
                mu = np.linalg.solve(gram[np.ix_(idx, idx)], resid[idx])
            except np.linalg.LinAlgError:
                continue
            if np.any(mu < -tol):
                continue
            # slack of every constraint at g = gamma_n + cov A_S' mu
            if np.any(gram[:, idx] @ mu - resid < -tol):
                continue
            g = gamma_n + cov_at[:, idx] @ mu
            return g, max(float(mu @ resid[idx]), 0.0)
    raise EstimationError("no KKT point found; constraint piece may be infeasible")


def lrt_test(est: JointRREstimate, cfg: NITestConfig) -> TestOutcome:
    """Likelihood-ratio-type test of the composite null.

    T = min over null pieces of the squared cov-metric distance from
    gamma_n; reject iff T exceeds the 1-alpha quantile of chi-square
    with k = number of arms degrees of freedom. Conservative because
    the null is a union and the reference distribution ignores the
    active constraint count.
    """
    ref = int(cfg.ref_arm)
    i = est.arm_index(ref)
    k = len(est.arms)
    cov = est.sigma_gamma / est.n
    gamma_n = np.asarray(est.gamma, dtype=np.float64)

    pieces = []
    e_ref = np.eye(k)[i]
    pieces.append(("efficacy", e_ref, cfg.delta))
    for a in est.arms:
        if a == ref:
            continue
        j = est.arm_index(a)
        vec = e_ref - np.eye(k)[j]
        pieces.append((f"vs_arm_{a}", vec, cfg.epsilon))

    records = []
    t_stat = np.inf
    for name, vec, bound in pieces:
        g_star, obj = constrained_gaussian_mle(gamma_n, cov, vec, bound)
        records.append({"piece": name, "objective": obj, "projection": g_star.tolist()})
        t_stat = min(t_stat, obj)

    threshold = float(chi2.ppf(1.0 - cfg.alpha, df=k))
    return TestOutcome(
        reject=bool(t_stat > threshold),
        method="lrt",
        config=cfg,
        marginals=records,
        statistic=float(t_stat),
        threshold=threshold,
    )
