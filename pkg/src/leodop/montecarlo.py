"""Monte Carlo validation of the DDOP error theory.

Repeated noisy solves over a fixed pass produce empirical along/cross error
clouds whose 95% confidence ellipse is compared against the theoretical one
predicted by the scaled-Jacobian covariance. Per-trial seeds are derived by
counter-mode mixing of (base_seed, trial index), so results are independent
of execution order and reproducible bit-for-bit.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import timedelta

import numpy as np

from . import ddop
from .ddop import ConfidenceEllipse, ScalingFactors, chi2_quantile_2dof
from .doppler import NoiseModel, generate_measurements, weight_matrix
from .errors import DegenerateSamples, TooFewConverged
from .estimator import (
    SolverConfig,
    StateVector,
    VERTICAL_ECEF_Z,
    jacobian,
    reduce_jacobian,
    solve,
)
from .geometry import (
    EnuFrame,
    RtnFrame,
    closest_approach,
    enu_frame,
    horizontal_along_cross,
    rtn_frame,
)
from .orbit import propagate
from .scenario import Scenario

_MIN_CONVERGED_FRACTION = 0.9


@dataclass(frozen=True)
class McConfig:
    n_trials: int = 1000
    base_seed: int = 0
    noise: NoiseModel = NoiseModel(sigma_dopp=0.5)
    solver: SolverConfig = SolverConfig()
    confidence: float = 0.95
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trials < 2:
            raise ValueError("n_trials must be >= 2")


@dataclass(frozen=True)
class PassTheory:
    """Everything the DDOP theory says about one observation configuration."""

    rtn: RtnFrame
    enu: EnuFrame
    scalers: ScalingFactors
    covariance_scaled: np.ndarray
    metrics: ddop.DdopResult
    cov_along_cross_m2: np.ndarray
    ellipse: ConfidenceEllipse
    along_error: float   # confidence-scaled axis nearer the along direction
    cross_error: float   # confidence-scaled axis nearer the cross direction


@dataclass(frozen=True)
class McResult:
    along_errors: np.ndarray
    cross_errors: np.ndarray
    east_errors: np.ndarray
    north_errors: np.ndarray
    trial_converged: np.ndarray
    empirical_cov: np.ndarray
    empirical_ellipse: ConfidenceEllipse
    empirical_along: float
    empirical_cross: float
    theoretical_ellipse: ConfidenceEllipse
    theory: PassTheory
    converged_count: int
    n_trials: int
    containment_fraction: float


def axis_errors(cov: np.ndarray, confidence: float = 0.95) -> tuple[float, float]:
    """Ellipse axis values labeled by rank: (minor, major) -> (along, cross).

    The single-pass geometry pins the dominant uncertainty to the weakly
    constrained near-cross direction, so the major axis reports as the
    cross error and the minor one as the along error.
    """
    eigvals = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    k = chi2_quantile_2dof(confidence)
    minor, major = np.sqrt(k * np.clip(eigvals, 0.0, None))
    return float(minor), float(major)


def trial_seed(base_seed: int, trial: int) -> int:
    """Deterministic per-trial RNG seed, independent of execution order."""
    ss = np.random.SeedSequence((base_seed, trial))
    return int(ss.generate_state(1, np.uint64)[0])


def pass_theory(scenario: Scenario, epochs=None, sigma=None,
                confidence: float = 0.95) -> PassTheory:
    """DDOP theory for a scenario (optionally at overriding epochs/sigma)."""
    epochs = list(scenario.epochs if epochs is None else epochs)
    sigma = scenario.noise.sigma_dopp if sigma is None else sigma
    truth = scenario.truth
    noiseless = NoiseModel(sigma_dopp=0.0, elevation_scaled=scenario.noise.elevation_scaled,
                           seed=scenario.noise.seed)
    mset = generate_measurements(scenario.source, scenario.user, truth, epochs,
                                 noiseless, scenario.carrier_wavelength,
                                 scenario.mask_angle_deg)
    J = jacobian(truth, mset, scenario.source)
    enu = enu_frame(scenario.user)
    if scenario.solver.n_states == 4:
        J = reduce_jacobian(J, enu, scenario.solver)
    w = np.diag(weight_matrix(mset))
    sat_pos = np.array([s.position for s in mset.satellite_states])
    a_orb = float(np.mean(np.linalg.norm(sat_pos, axis=1)))
    scalers = ddop.scaling_factors(a_orb)
    C = ddop.ddop_covariance(ddop.scale_jacobian(J, scalers), w)
    metrics = ddop.ddop_metrics(C, scalers, sigma, mode=scenario.solver.mode)

    # RTN anchored at the observation state closest to the user
    ranges = np.linalg.norm(sat_pos - truth.position_ecef, axis=1)
    state_ca = mset.satellite_states[int(np.argmin(ranges))]
    rtn = rtn_frame(state_ca)
    ecef_z = scenario.solver.vertical_constraint == VERTICAL_ECEF_Z \
        and scenario.solver.n_states == 4
    cov = ddop.horizontal_covariance_m2(C, rtn, enu, sigma, scalers,
                                        ecef_z_constrained=ecef_z)
    ellipse = ddop.ellipse_from_covariance(cov, confidence)
    along, cross = axis_errors(cov, confidence)
    return PassTheory(rtn=rtn, enu=enu, scalers=scalers, covariance_scaled=C,
                      metrics=metrics, cov_along_cross_m2=cov, ellipse=ellipse,
                      along_error=along, cross_error=cross)


def decompose_error(est: StateVector, truth: StateVector, rtn: RtnFrame,
                    enu: EnuFrame) -> tuple[float, float]:
    """Horizontal position error split into (along, cross) components (m)."""
    along_axis, cross_axis = horizontal_along_cross(rtn, enu)
    err = est.position_ecef - truth.position_ecef
    return float(err @ along_axis), float(err @ cross_axis)


def empirical_ellipse(along_errors, cross_errors,
                      confidence: float = 0.95) -> ConfidenceEllipse:
    """Confidence ellipse of the sample covariance (unbiased, N-1 divisor)."""
    along = np.asarray(along_errors, dtype=float)
    cross = np.asarray(cross_errors, dtype=float)
    if len(along) < 2 or len(along) != len(cross):
        raise DegenerateSamples("need at least two paired samples")
    cov = np.cov(np.vstack([along, cross]), ddof=1)
    if np.linalg.eigvalsh(cov)[0] <= 0.0:
        raise DegenerateSamples("sample covariance is rank-deficient")
    return ddop.ellipse_from_covariance(cov, confidence)


def _run_one_trial(scenario: Scenario, mc: McConfig, trial: int):
    noise = NoiseModel(sigma_dopp=mc.noise.sigma_dopp,
                       elevation_scaled=mc.noise.elevation_scaled,
                       seed=trial_seed(mc.base_seed, trial))
    truth = scenario.truth
    mset = generate_measurements(scenario.source, scenario.user, truth,
                                 scenario.epochs, noise,
                                 scenario.carrier_wavelength,
                                 scenario.mask_angle_deg)
    result = solve(mset, scenario.source, truth, mc.solver)
    err = result.estimate.position_ecef - truth.position_ecef
    return result.converged, err


def _trial_chunk(args):
    scenario, mc, trials = args
    return [_run_one_trial(scenario, mc, t) for t in trials]


def run_trials(scenario: Scenario, mc: McConfig) -> McResult:
    """Run the Monte Carlo comparison of empirical errors against theory.

    Raises:
        TooFewConverged: fewer than 90% of trials converged.
    """
    theory = pass_theory(scenario, sigma=mc.noise.sigma_dopp,
                         confidence=mc.confidence)

    if mc.n_jobs > 1:
        chunks = np.array_split(np.arange(mc.n_trials), mc.n_jobs * 4)
        outcomes = [None] * mc.n_trials
        with ProcessPoolExecutor(max_workers=mc.n_jobs) as pool:
            jobs = [(scenario, mc, [int(t) for t in chunk])
                    for chunk in chunks if len(chunk)]
            for (_, _, trials), results in zip(jobs, pool.map(_trial_chunk, jobs)):
                for t, out in zip(trials, results):
                    outcomes[t] = out
    else:
        outcomes = [_run_one_trial(scenario, mc, t) for t in range(mc.n_trials)]

    along_axis, cross_axis = horizontal_along_cross(theory.rtn, theory.enu)
    converged = np.array([ok for ok, _ in outcomes], dtype=bool)
    errors = np.array([err for _, err in outcomes])
    kept = errors[converged]
    if converged.sum() < _MIN_CONVERGED_FRACTION * mc.n_trials:
        raise TooFewConverged(int(converged.sum()), mc.n_trials)

    along = kept @ along_axis
    cross = kept @ cross_axis
    east = kept @ theory.enu.east
    north = kept @ theory.enu.north

    cov_emp = np.cov(np.vstack([along, cross]), ddof=1)
    ellipse_emp = empirical_ellipse(along, cross, mc.confidence)
    emp_along, emp_cross = axis_errors(cov_emp, mc.confidence)

    inv_theory = np.linalg.inv(theory.cov_along_cross_m2)
    d2 = np.einsum("ij,jk,ik->i", np.column_stack([along, cross]), inv_theory,
                   np.column_stack([along, cross]))
    containment = float(np.mean(d2 <= chi2_quantile_2dof(mc.confidence)))

    return McResult(
        along_errors=along, cross_errors=cross,
        east_errors=east, north_errors=north,
        trial_converged=converged,
        empirical_cov=cov_emp,
        empirical_ellipse=ellipse_emp,
        empirical_along=emp_along, empirical_cross=emp_cross,
        theoretical_ellipse=theory.ellipse,
        theory=theory,
        converged_count=int(converged.sum()),
        n_trials=mc.n_trials,
        containment_fraction=containment,
    )


def write_trials_csv(result: McResult, path) -> None:
    """Per-trial errors: trial, converged, along_m, cross_m, east_m, north_m."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "converged", "along_m", "cross_m",
                         "east_m", "north_m"])
        k = 0
        for trial, ok in enumerate(result.trial_converged):
            if ok:
                writer.writerow([
                    trial, "true",
                    f"{result.along_errors[k]:.10g}",
                    f"{result.cross_errors[k]:.10g}",
                    f"{result.east_errors[k]:.10g}",
                    f"{result.north_errors[k]:.10g}",
                ])
                k += 1
            else:
                writer.writerow([trial, "false", "", "", "", ""])
