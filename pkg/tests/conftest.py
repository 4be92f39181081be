import numpy as np
import pytest

from platformrr.data import CoarseningMap, Dataset, TrialDesign
from platformrr.simulate import Scenario

OPEN_END = 1e9


def make_design(k=1, q=1, tau=10.0, window_sets=None, bounds=None):
    if window_sets is None:
        window_sets = {a: frozenset(range(1, q + 1)) for a in range(1, k + 1)}
    if bounds is None:
        bounds = tuple((float(w - 1), float(w)) for w in range(1, q + 1))
    return TrialDesign(k=k, q=q, tau=tau, window_sets=window_sets, calendar_bounds=bounds)


def make_dataset(rows, design=None, coarsening=None, kind="platform"):
    """Build a Dataset from (x, delta, arm, window, z) tuples."""
    if design is None:
        design = make_design()
    if coarsening is None:
        coarsening = CoarseningMap.constant(sorted({str(r[4]) for r in rows}))
    return Dataset.from_arrays(
        ids=[str(i) for i in range(len(rows))],
        x=[r[0] for r in rows],
        delta=[r[1] for r in rows],
        arm=[r[2] for r in rows],
        window=[r[3] for r in rows],
        z=[str(r[4]) for r in rows],
        design=design,
        coarsening=coarsening,
        kind=kind,
    )


def shared_window_scenario(n_per_arm=200, ve=(0.3, 0.5), hazard=0.02, q=1, admin=12.0):
    """Two interventions sharing every window, one covariate level."""
    design = make_design(k=2, q=q, tau=6.0)
    return Scenario(
        design=design,
        enrollment={w: n_per_arm for w in range(1, q + 1)},
        covariate_weights={w: {"z": 1.0} for w in range(1, q + 1)},
        ve={1: ve[0], 2: ve[1]},
        control_hazards={w: {"z": [(0.0, OPEN_END, hazard)]} for w in range(1, q + 1)},
        loss_upper=120.0,
        admin_cutoff=admin,
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260814)


@pytest.fixture(scope="session")
def mc_variance_study():
    """Replicated joint estimates on one shared-control scenario, n=5100."""
    from platformrr.influence import covariance_rr
    from platformrr.simulate import simulate_platform

    sc = shared_window_scenario(n_per_arm=1700)
    reps = 2000
    gamma = np.empty((reps, 2))
    var_hat = np.empty((reps, 2))
    cov_hat = np.empty(reps)
    for r in range(reps):
        est = covariance_rr(simulate_platform(sc, r), (1, 2), "all", 6.0)
        gamma[r] = est.gamma
        var_hat[r] = np.diag(est.sigma_gamma) / est.n
        cov_hat[r] = est.sigma_gamma[0, 1] / est.n
    return {"gamma": gamma, "var_hat": var_hat, "cov_hat": cov_hat, "n": 5100}
