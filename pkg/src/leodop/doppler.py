"""Doppler forward model: range rates, measurement stacking and noise.

Range rate follows the sign convention rho_dot = -lambda * f_D: a satellite
approaching the user produces a negative geometric range rate. The receiver
clock drift enters pre-scaled by the speed of light (m/s) and the along-track
time offset shifts the epoch at which the satellite state is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .constants import DEFAULT_MASK_ANGLE_DEG, DEFAULT_WAVELENGTH
from .errors import CoincidentPoints, WindowNotVisible, ZeroElevation
from .geometry import GeodeticPosition, elevations_deg, enu_frame
from .orbit import OrbitSource, SatelliteState, seconds_since_reference, states_at

if TYPE_CHECKING:
    from .estimator import StateVector

_MIN_RANGE_M = 1.0


@dataclass(frozen=True)
class DopplerMeasurement:
    """One timestamped range-rate observation with its geometry context."""

    epoch: datetime
    range_rate: float   # m/s
    elevation: float    # deg
    sigma: float        # m/s


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian measurement noise, optionally elevation-scaled.

    With ``elevation_scaled`` the per-epoch sigma is sigma_dopp / sin(E_i),
    matching the sin^2 elevation weighting of the estimator so that the
    scaled-covariance prediction is the exact first-order error theory.
    """

    sigma_dopp: float
    elevation_scaled: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.sigma_dopp < 0.0:
            raise ValueError("sigma_dopp must be non-negative")

    def sigmas(self, elevations_degrees: np.ndarray) -> np.ndarray:
        if not self.elevation_scaled:
            return np.full(len(elevations_degrees), self.sigma_dopp)
        return self.sigma_dopp / np.sin(np.radians(elevations_degrees))


@dataclass(frozen=True)
class MeasurementSet:
    """Stacked multi-epoch Doppler observations with matching satellite states."""

    measurements: tuple[DopplerMeasurement, ...]
    satellite_states: tuple[SatelliteState, ...]
    carrier_wavelength: float = DEFAULT_WAVELENGTH

    def __post_init__(self):
        if len(self.measurements) != len(self.satellite_states):
            raise ValueError("measurements and satellite states differ in length")
        epochs = [m.epoch for m in self.measurements]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError("measurement epochs must be strictly increasing")

    def __len__(self) -> int:
        return len(self.measurements)

    @property
    def epochs(self) -> list[datetime]:
        return [m.epoch for m in self.measurements]

    @property
    def z(self) -> np.ndarray:
        return np.array([m.range_rate for m in self.measurements])

    @property
    def elevations(self) -> np.ndarray:
        return np.array([m.elevation for m in self.measurements])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([m.sigma for m in self.measurements])


def hz_to_range_rate(f_d: float, wavelength: float = DEFAULT_WAVELENGTH) -> float:
    """Doppler shift (Hz) to range rate (m/s): rho_dot = -lambda * f_D."""
    if wavelength <= 0.0:
        raise ValueError("wavelength must be positive")
    return -wavelength * f_d


def range_rate_to_hz(range_rate: float, wavelength: float = DEFAULT_WAVELENGTH) -> float:
    if wavelength <= 0.0:
        raise ValueError("wavelength must be positive")
    return -range_rate / wavelength


def predict_range_rate(sat: SatelliteState, user_ecef,
                       clock_drift_scaled: float = 0.0) -> float:
    """Single-epoch modeled range rate -v_s . u_hat + c*ddelta_d.

    The caller supplies ``sat`` already propagated at the offset epoch
    t - delta_c; u_hat points from the satellite to the user.
    """
    delta = np.asarray(user_ecef, dtype=float) - sat.position
    rho = np.linalg.norm(delta)
    if rho < _MIN_RANGE_M:
        raise CoincidentPoints("user and satellite positions coincide")
    return float(-(sat.velocity @ delta) / rho + clock_drift_scaled)


def _series_geometry(source: OrbitSource, theta: "StateVector",
                     epochs: Sequence[datetime]):
    """Satellite state arrays at the offset epochs plus user deltas/ranges."""
    tsec = np.array([seconds_since_reference(source, t) for t in epochs])
    pos, vel, acc = states_at(source, tsec - theta.time_offset)
    delta = theta.position_ecef - pos
    rho = np.linalg.norm(delta, axis=1)
    if np.any(rho < _MIN_RANGE_M):
        raise CoincidentPoints("user and satellite positions coincide")
    return pos, vel, acc, delta, rho


def predict_series(source: OrbitSource, theta: "StateVector",
                   epochs: Sequence[datetime]) -> np.ndarray:
    """Modeled range rates at all epochs, satellite evaluated at t - delta_c."""
    if len(epochs) == 0:
        return np.array([])
    _, vel, _, delta, rho = _series_geometry(source, theta, epochs)
    return -np.sum(vel * delta, axis=1) / rho + theta.clock_drift_scaled


def generate_measurements(source: OrbitSource, user: GeodeticPosition,
                          true_theta: "StateVector", epochs: Sequence[datetime],
                          noise: NoiseModel,
                          carrier_wavelength: float = DEFAULT_WAVELENGTH,
                          mask_angle_deg: float = DEFAULT_MASK_ANGLE_DEG,
                          ) -> MeasurementSet:
    """Simulate noisy observations z_i = h(t_i; theta_true) + eps_i.

    Deterministic for a given ``noise.seed``. Raises WindowNotVisible if any
    epoch falls below the mask angle.
    """
    pos, vel, acc, delta, rho = _series_geometry(source, true_theta, epochs)
    frame = enu_frame(user)
    elev = elevations_deg(frame, pos)
    if np.any(elev < mask_angle_deg):
        raise WindowNotVisible(
            f"elevation {elev.min():.2f} deg below the {mask_angle_deg} deg mask")

    truth = -np.sum(vel * delta, axis=1) / rho + true_theta.clock_drift_scaled
    sigmas = noise.sigmas(elev)
    rng = np.random.default_rng(noise.seed)
    z = truth + rng.standard_normal(len(truth)) * sigmas

    measurements = tuple(
        DopplerMeasurement(epoch=t, range_rate=float(z[i]),
                           elevation=float(elev[i]), sigma=float(sigmas[i]))
        for i, t in enumerate(epochs))
    states = tuple(
        SatelliteState(epoch=t, position=pos[i], velocity=vel[i], acceleration=acc[i])
        for i, t in enumerate(epochs))
    return MeasurementSet(measurements=measurements, satellite_states=states,
                          carrier_wavelength=carrier_wavelength)


def weight_matrix(mset: MeasurementSet) -> np.ndarray:
    """Elevation-based WLS weights: diagonal W_ii = sin^2(E_i)."""
    elev = mset.elevations
    if np.any(elev <= 0.0):
        raise ZeroElevation("weight undefined at non-positive elevation")
    return np.diag(np.sin(np.radians(elev)) ** 2)
