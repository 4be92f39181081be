"""Covariate-adjusted relative risks for shared-control platform trials.

Estimation stratifies on enrollment window and a discrete covariate,
mixes Nelson-Aalen (or Kaplan-Meier) incidences over the covariate law,
and quantifies joint uncertainty across interventions, including the
covariance induced by sharing contemporaneous controls, via empirical
influence functions. On top sit relative-efficacy contrasts with Wald
intervals, adaptive noninferiority tests, a seeded trial simulator, and
Monte Carlo reproduction studies.
"""

from .contrasts import (
    ADDITIVE,
    CIResult,
    Contrast,
    ContrastResult,
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
from .data import (
    CoarseningMap,
    Dataset,
    ParticipantRecord,
    TrialDesign,
    ValidationReport,
    load_dataset,
    validate,
)
from .errors import DataError, EstimationError, InfeasibleError, PlatformRRError
from .influence import (
    JointRREstimate,
    PluginContext,
    build_context,
    chf_ratio_variance,
    covariance_rr,
    eval_f_gamma,
    eval_f_phi,
)
from .noninferiority import (
    NITestConfig,
    TestOutcome,
    constrained_gaussian_mle,
    intersection_test,
    lrt_test,
)
from .repro import (
    STUDIES,
    StudyResult,
    appendix_f_study,
    binary_joint_estimate,
    binary_rr_covariance,
    section6_coverage,
    section6_efficiency,
    section6_power,
    table3_study,
    width_ratio_bins,
)
from .simulate import (
    MCSummary,
    Scenario,
    attack_rate_to_hazard,
    control_share,
    load_preset,
    monte_carlo,
    resample_shared_controls,
    sample_piecewise_exponential,
    simulate_platform,
    simulate_separate,
    true_event_prob,
    true_rr,
)
from .survival import (
    CovariateDist,
    RREstimate,
    StratifiedCurve,
    chf_ratio,
    counting_processes,
    covariate_dist,
    kaplan_meier,
    mixture_incidence,
    nelson_aalen,
    relative_risk,
)

__version__ = "0.1.0"

__all__ = [
    "ADDITIVE",
    "CIResult",
    "CoarseningMap",
    "Contrast",
    "ContrastResult",
    "CovariateDist",
    "DataError",
    "Dataset",
    "EstimationError",
    "InfeasibleError",
    "JointRREstimate",
    "LOG_RATIO",
    "MCSummary",
    "MULTIPLICATIVE",
    "NITestConfig",
    "ParticipantRecord",
    "PlatformRRError",
    "PluginContext",
    "RREstimate",
    "STUDIES",
    "Scenario",
    "StratifiedCurve",
    "StudyResult",
    "TestOutcome",
    "TrialDesign",
    "ValidationReport",
    "appendix_f_study",
    "attack_rate_to_hazard",
    "binary_joint_estimate",
    "binary_rr_covariance",
    "build_context",
    "chf_ratio",
    "chf_ratio_variance",
    "constrained_gaussian_mle",
    "contrast_estimate_platform",
    "control_share",
    "counting_processes",
    "covariance_rr",
    "covariate_dist",
    "custom_contrast",
    "estimate_separate",
    "eval_f_gamma",
    "eval_f_phi",
    "get_contrast",
    "intersection_test",
    "kaplan_meier",
    "load_dataset",
    "load_preset",
    "lrt_test",
    "mixture_incidence",
    "monte_carlo",
    "nelson_aalen",
    "relative_risk",
    "resample_shared_controls",
    "sample_piecewise_exponential",
    "section6_coverage",
    "section6_efficiency",
    "section6_power",
    "separate_arm_summary",
    "simulate_platform",
    "simulate_separate",
    "table3_study",
    "true_event_prob",
    "true_rr",
    "validate",
    "validate_contrast",
    "wald_ci",
    "width_ratio",
    "width_ratio_bins",
]
