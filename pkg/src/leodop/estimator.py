"""Measurement Jacobian and the iterative weighted least-squares solver.

The state is [r_x, r_y, r_z, c*ddelta_d, delta_c]: the clock drift is stored
pre-multiplied by the speed of light so its Jacobian column is exactly one,
and delta_c (s) shifts the satellite propagation epoch. A 4-state mode
constrains the vertical, by default freezing ECEF z (the formulation whose
x/y unknowns the covariance analysis indexes). The alternative local-up
constraint fixes height in the ENU frame anchored at the initial guess;
beware that for near-circular orbits a time offset is equivalent to an
almost exactly geocentric-tangent displacement of the user, so the local-up
variant leaves the (along-track, delta_c) pair close to unobservable while
freezing ECEF z breaks the equivalence at mid latitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ddop import scaling_factors
from .doppler import MeasurementSet, predict_series
from .errors import MissingAcceleration, SingularNormalMatrix
from .geometry import EnuFrame, ecef_to_geodetic, enu_frame
from .orbit import OrbitSource, seconds_since_reference, states_at

FULL_5STATE = "full5"
HORIZONTAL_4STATE = "horizontal4"
VERTICAL_LOCAL_UP = "local_up"
VERTICAL_ECEF_Z = "ecef_z"

_MAX_NORMAL_CONDITION = 1e14


@dataclass(frozen=True)
class StateVector:
    """Unknowns: ECEF position (m), scaled clock drift (m/s), time offset (s)."""

    position_ecef: np.ndarray
    clock_drift_scaled: float = 0.0
    time_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position_ecef",
                           np.asarray(self.position_ecef, dtype=float))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.position_ecef,
                               [self.clock_drift_scaled, self.time_offset]])


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 25
    step_tolerance: float = 1e-4  # scaled-units (m/s) step norm
    mode: str = HORIZONTAL_4STATE
    vertical_constraint: str = VERTICAL_ECEF_Z

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.step_tolerance <= 0.0:
            raise ValueError("step_tolerance must be positive")
        if self.mode not in (FULL_5STATE, HORIZONTAL_4STATE):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if self.vertical_constraint not in (VERTICAL_LOCAL_UP, VERTICAL_ECEF_Z):
            raise ValueError(f"unknown vertical constraint {self.vertical_constraint!r}")

    @property
    def n_states(self) -> int:
        return 5 if self.mode == FULL_5STATE else 4


@dataclass(frozen=True)
class SolveResult:
    estimate: StateVector
    iterations: int
    converged: bool
    weighted_residual_norm: float
    jacobian_at_solution: np.ndarray
    normal_matrix_condition: float


def _jacobian_from_states(pos: np.ndarray, vel: np.ndarray, acc: np.ndarray,
                          user: np.ndarray) -> np.ndarray:
    delta = user - pos                       # (M, 3), r_u - r_s
    rho = np.linalg.norm(delta, axis=1)      # (M,)
    vdotd = np.sum(vel * delta, axis=1)

    J = np.empty((len(rho), 5))
    # d rho_dot / d r: -v_s/rho + (v_s . delta) delta / rho^3
    J[:, 0:3] = -vel / rho[:, None] + (vdotd / rho ** 3)[:, None] * delta
    # clock drift column: state carries c*ddelta_d directly
    J[:, 3] = 1.0
    # d rho_dot / d delta_c: a_s . delta/rho - |v_s|^2/rho + (v_s . delta)^2/rho^3
    J[:, 4] = (np.sum(acc * delta, axis=1) / rho
               - np.sum(vel * vel, axis=1) / rho
               + vdotd ** 2 / rho ** 3)
    return J


def jacobian(theta: StateVector, mset: MeasurementSet,
             source: OrbitSource) -> np.ndarray:
    """M x 5 Jacobian of the range-rate model at theta.

    Satellite states are propagated at t_i - delta_c. Columns are the
    partials with respect to [r_x, r_y, r_z, c*ddelta_d, delta_c].
    """
    tsec = np.array([seconds_since_reference(source, t) for t in mset.epochs])
    pos, vel, acc = states_at(source, tsec - theta.time_offset)
    if acc is None or np.any(~np.isfinite(acc)):
        raise MissingAcceleration("satellite acceleration unavailable")
    return _jacobian_from_states(pos, vel, acc, theta.position_ecef)


def reduce_jacobian(J: np.ndarray, frame: EnuFrame,
                    config: SolverConfig) -> np.ndarray:
    """Collapse the three position columns to the two horizontal ones.

    LocalUp re-expresses the position partials along the frame's east/north
    directions (chain rule); EcefZ simply drops the z column.
    """
    if config.vertical_constraint == VERTICAL_ECEF_Z:
        return np.column_stack([J[:, 0], J[:, 1], J[:, 3], J[:, 4]])
    return np.column_stack([J[:, 0:3] @ frame.east, J[:, 0:3] @ frame.north,
                            J[:, 3], J[:, 4]])


def _weight_vector(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim == 2:
        return np.diag(W)
    return W


def wls_step(J: np.ndarray, W, residuals: np.ndarray) -> np.ndarray:
    """One weighted least-squares update (Gauss-Newton normal equations).

    Solved through the SVD route on the column-equilibrated, sqrt-weighted
    design matrix rather than inverting J^T W J explicitly; the singularity
    gate therefore measures geometry, not the (huge) unit spread between
    meter and second columns.

    Raises:
        SingularNormalMatrix: equilibrated normal-matrix condition above 1e14.
    """
    w = _weight_vector(W)
    sqw = np.sqrt(w)
    A = J * sqw[:, None]
    col_scale = np.linalg.norm(A, axis=0)
    if np.any(col_scale == 0.0):
        raise SingularNormalMatrix(float("inf"))
    b = np.asarray(residuals, dtype=float) * sqw
    update, _, rank, sv = np.linalg.lstsq(A / col_scale, b, rcond=None)
    if rank < J.shape[1]:
        raise SingularNormalMatrix(float("inf"))
    condition = (sv[0] / sv[-1]) ** 2
    if condition > _MAX_NORMAL_CONDITION:
        raise SingularNormalMatrix(condition)
    return update / col_scale


def _apply_update(theta: StateVector, step: np.ndarray, config: SolverConfig,
                  frame: EnuFrame | None) -> StateVector:
    if config.mode == FULL_5STATE:
        return StateVector(theta.position_ecef + step[0:3],
                           theta.clock_drift_scaled + step[3],
                           theta.time_offset + step[4])
    if config.vertical_constraint == VERTICAL_ECEF_Z:
        delta_pos = np.array([step[0], step[1], 0.0])
    else:
        delta_pos = step[0] * frame.east + step[1] * frame.north
    return StateVector(theta.position_ecef + delta_pos,
                       theta.clock_drift_scaled + step[2],
                       theta.time_offset + step[3])


def _scaled_step_norm(step: np.ndarray, config: SolverConfig,
                      gamma: float, eta: float) -> float:
    scale = np.ones(len(step))
    scale[:config.n_states - 2] = gamma
    scale[-1] = eta
    return float(np.linalg.norm(step * scale))


def solve(mset: MeasurementSet, source: OrbitSource, initial: StateVector,
          config: SolverConfig = SolverConfig()) -> SolveResult:
    """Iterative Gauss-Newton WLS solution of the Doppler positioning problem.

    Satellite states are re-propagated with the updated delta_c on every
    iteration. Convergence is declared when the scaled step norm drops below
    ``config.step_tolerance``; hitting max_iterations returns the last
    iterate with ``converged=False``.
    """
    from .doppler import weight_matrix

    if len(mset) < config.n_states:
        raise ValueError(
            f"{len(mset)} measurements cannot determine {config.n_states} states")

    w = _weight_vector(weight_matrix(mset))
    z = mset.z
    frame = None
    if config.mode == HORIZONTAL_4STATE:
        frame = enu_frame(ecef_to_geodetic(initial.position_ecef))

    # scaling for the convergence norm, from the mean orbit radius
    tsec = np.array([seconds_since_reference(source, t) for t in mset.epochs])
    pos0, _, _ = states_at(source, tsec)
    s = scaling_factors(float(np.mean(np.linalg.norm(pos0, axis=1))))

    theta = initial
    converged = False
    iterations = 0
    J_red = np.empty((len(mset), config.n_states))
    condition = float("nan")

    for iterations in range(1, config.max_iterations + 1):
        predicted = predict_series(source, theta, mset.epochs)
        residuals = z - predicted
        J5 = jacobian(theta, mset, source)
        J_red = J5 if config.mode == FULL_5STATE else reduce_jacobian(J5, frame, config)
        step = wls_step(J_red, w, residuals)
        theta = _apply_update(theta, step, config, frame)
        if _scaled_step_norm(step, config, s.gamma, s.eta) < config.step_tolerance:
            converged = True
            break

    final_residuals = z - predict_series(source, theta, mset.epochs)
    A = J_red * np.sqrt(w)[:, None]
    col_scale = np.linalg.norm(A, axis=0)
    sv = np.linalg.svd(A / np.where(col_scale > 0, col_scale, 1.0), compute_uv=False)
    condition = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0 else float("inf")
    return SolveResult(
        estimate=theta,
        iterations=iterations,
        converged=converged,
        weighted_residual_norm=float(np.sqrt(final_residuals @ (w * final_residuals))),
        jacobian_at_solution=J_red,
        normal_matrix_condition=condition,
    )
