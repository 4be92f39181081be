"""Contrast functions, delta-method variances, and Wald intervals.

A contrast Theta(r1, r2) maps the relative risks of two arms to a
relative-efficacy value. The sign condition grad1 * grad2 < 0 makes a
contrast respect the natural partial order (better than comparator in
both margins implies better contrast); the additive and multiplicative
contrasts satisfy it everywhere on (0, inf)^2.

Platform data give the contrast variance by the delta method applied to
the joint covariance of the relative risks, including the cross term
induced by control sharing. Separate trials contribute no cross term:
their contrast variance is a weighted sum of per-trial influence
variances.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import EstimationError
from .influence import JointRREstimate, build_context, f_gamma_matrix

__all__ = [
    "Contrast",
    "ADDITIVE",
    "MULTIPLICATIVE",
    "LOG_RATIO",
    "get_contrast",
    "custom_contrast",
    "validate_contrast",
    "CIResult",
    "wald_ci",
    "ContrastResult",
    "contrast_estimate_platform",
    "separate_arm_summary",
    "estimate_separate",
    "width_ratio",
]


@dataclass(frozen=True)
class Contrast:
    """Differentiable relative-efficacy map of two relative risks."""

    id: str
    eval: callable
    grad: callable


def _fd_grad(fn, step=1e-6):
    def grad(r1, r2):
        d1 = (fn(r1 + step, r2) - fn(r1 - step, r2)) / (2 * step)
        d2 = (fn(r1, r2 + step) - fn(r1, r2 - step)) / (2 * step)
        return d1, d2

    return grad


ADDITIVE = Contrast("additive", lambda r1, r2: r1 - r2, lambda r1, r2: (1.0, -1.0))
MULTIPLICATIVE = Contrast("multiplicative", lambda r1, r2: r1 / r2, lambda r1, r2: (1.0 / r2, -r1 / r2**2))
LOG_RATIO = Contrast("log-ratio", lambda r1, r2: np.log(r1 / r2), lambda r1, r2: (1.0 / r1, -1.0 / r2))

_BY_ID = {c.id: c for c in (ADDITIVE, MULTIPLICATIVE, LOG_RATIO)}


def get_contrast(name) -> Contrast:
    if isinstance(name, Contrast):
        return name
    try:
        return _BY_ID[str(name)]
    except KeyError:
        raise EstimationError(f"unknown contrast {name!r} (have {sorted(_BY_ID)})") from None


def custom_contrast(fn, grad=None, id="custom") -> Contrast:
    """Wrap a user map; grad defaults to a central finite difference."""
    return Contrast(id, fn, grad if grad is not None else _fd_grad(fn))


def validate_contrast(c: Contrast, grid=None):
    """Check grad1 * grad2 < 0 on a grid; (ok, witness-or-None).

    The default grid covers (0, 2]^2, the relevant relative-risk range.
    """
    if grid is None:
        axis = np.linspace(0.2, 2.0, 10)
        grid = [(r1, r2) for r1 in axis for r2 in axis]
    for r1, r2 in grid:
        d1, d2 = c.grad(r1, r2)
        if not d1 * d2 < 0:
            return False, (float(r1), float(r2))
    return True, None


@dataclass(frozen=True)
class CIResult:
    """Two-sided Wald interval: estimate +/- z_{1-alpha/2} * se."""

    estimate: float
    lower: float
    upper: float
    alpha: float
    se: float
    n_effective: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_json(self) -> str:
        return json.dumps(
            {
                "estimate": self.estimate,
                "lower": self.lower,
                "upper": self.upper,
                "alpha": self.alpha,
                "se": self.se,
                "n_effective": self.n_effective,
            },
            indent=2,
        )


def wald_ci(estimate, se, alpha, n_effective) -> CIResult:
    z = float(ndtri(1.0 - alpha / 2.0))
    return CIResult(
        estimate=float(estimate),
        lower=float(estimate - z * se),
        upper=float(estimate + z * se),
        alpha=float(alpha),
        se=float(se),
        n_effective=int(n_effective),
    )


@dataclass(frozen=True)
class ContrastResult:
    """Contrast estimate with its asymptotic variance and Wald CI.

    ``sigma2`` scales with the root-n (platform) or root-m (separate)
    normalization: se = sqrt(sigma2 / n_effective).
    """

    theta: float
    sigma2: float
    ci: CIResult
    contrast_id: str
    arms: tuple
    source: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "theta": self.theta,
                "sigma2": self.sigma2,
                "ci": json.loads(self.ci.to_json()),
                "contrast_id": self.contrast_id,
                "arms": list(self.arms),
                "source": self.source,
            },
            indent=2,
        )


def contrast_estimate_platform(est: JointRREstimate, a1, a2, c, alpha=0.05) -> ContrastResult:
    """Delta-method contrast from a joint platform estimate.

    sigma2 = grad^T sigma_gamma grad over the (a1, a2) block, which
    carries the shared-control cross term.
    """
    c = get_contrast(c)
    i, j = est.arm_index(a1), est.arm_index(a2)
    r1, r2 = float(est.gamma[i]), float(est.gamma[j])
    d1, d2 = c.grad(r1, r2)
    if not d1 * d2 < 0:
        warnings.warn(
            f"contrast {c.id!r} violates the sign condition at ({r1:.4g}, {r2:.4g}); "
            "the platform-vs-separate width ordering is not guaranteed",
            stacklevel=2,
        )
    sub = est.sigma_gamma[np.ix_([i, j], [i, j])]
    g = np.array([d1, d2])
    sigma2 = float(g @ sub @ g)
    theta = float(c.eval(r1, r2))
    se = float(np.sqrt(sigma2 / est.n))
    return ContrastResult(
        theta=theta,
        sigma2=sigma2,
        ci=wald_ci(theta, se, alpha, est.n),
        contrast_id=c.id,
        arms=(int(a1), int(a2)),
        source="platform",
    )


def separate_arm_summary(dataset, a, v, t):
    """Per-trial pieces for the separate-trials contrast.

    Returns (gamma_dagger, vhat, m_a): the Kaplan-Meier plug-in relative
    risk pooled over the trial's windows, the per-record influence
    variance within the trial, and the trial size.
    """
    ctx = build_context(dataset, [a], v, t, survival="km", windows=None)
    F = f_gamma_matrix(ctx)
    m_a = dataset.n
    vhat = float(np.add.reduce(F[:, 0] * F[:, 0])) / m_a
    return ctx.rr[int(a)].value, vhat, m_a


def estimate_separate(datasets, a1, a2, v, t, c, alpha=0.05) -> ContrastResult:
    """Contrast estimate from two independent 2-arm trials.

    Each trial contributes its own relative risk and influence variance;
    independence zeroes the cross term. sigma2 = sum_j (m/m_j) *
    grad_j^2 * vhat_j with m the total size of both trials; the CI
    scales by sqrt(m).
    """
    c = get_contrast(c)
    by_arm = {}
    for ds in datasets:
        present = set(int(x) for x in np.unique(ds.arm)) - {0}
        for a in present:
            by_arm[a] = ds
    pieces = []
    for a in (int(a1), int(a2)):
        if a not in by_arm:
            raise EstimationError(f"no separate-trial dataset contains arm {a}")
        pieces.append(separate_arm_summary(by_arm[a], a, v, t))
    (r1, v1, m1), (r2, v2, m2) = pieces
    m = m1 + m2
    d1, d2 = c.grad(r1, r2)
    sigma2 = (m / m1) * d1**2 * v1 + (m / m2) * d2**2 * v2
    theta = float(c.eval(r1, r2))
    se = float(np.sqrt(sigma2 / m))
    return ContrastResult(
        theta=theta,
        sigma2=float(sigma2),
        ci=wald_ci(theta, se, alpha, m),
        contrast_id=c.id,
        arms=(int(a1), int(a2)),
        source="separate",
    )


def width_ratio(ci_platform: CIResult, ci_separate: CIResult) -> float:
    """Platform CI width over separate-trials CI width."""
    if ci_separate.width == 0:
        raise EstimationError("separate-trials interval has zero width")
    return ci_platform.width / ci_separate.width
