"""Doppler dilution of precision: scaled covariance and derived metrics.

The raw Jacobian mixes units, so its position columns are divided by gamma
(1/s) and the time-offset column by eta (m/s^2) before forming the
covariance (H~^T W H~)^-1. The resulting DDOP values are dimensionless;
multiplying by sigma/gamma, sigma/eta or sigma/c recovers 1-sigma errors in
meters, seconds and s/s respectively (sigma in m/s; multiply by the carrier
wavelength first when sigma is given in Hz).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, MU_EARTH, R_E_SPHERICAL
from .errors import DegenerateCovariance, OrbitBelowSurface, SingularGeometry
from .geometry import EnuFrame, RtnFrame, horizontal_along_cross

_MAX_CONDITION = 1e14

FULL_5STATE = "full5"
HORIZONTAL_4STATE = "horizontal4"


@dataclass(frozen=True)
class ScalingFactors:
    """Dimensional scalings rendering the Jacobian dimensionless."""

    gamma: float   # 1/s, position columns
    eta: float     # m/s^2, time-offset column
    a_orb: float   # m
    r_e: float = R_E_SPHERICAL
    mu: float = MU_EARTH


@dataclass(frozen=True)
class DdopResult:
    covariance_scaled: np.ndarray
    pddop: float
    hddop: float
    cddop: float
    tddop: float
    position_sigma: float      # m
    time_offset_sigma: float   # s
    drift_sigma: float         # s/s


@dataclass(frozen=True)
class ConfidenceEllipse:
    """Error ellipse in the horizontal along/cross-track plane."""

    semi_major: float     # m
    semi_minor: float     # m
    orientation: float    # rad from the along-track axis
    confidence: float = 0.95

    def __post_init__(self):
        if not self.semi_major >= self.semi_minor > 0.0:
            raise ValueError("ellipse axes must satisfy semi_major >= semi_minor > 0")


def chi2_quantile_2dof(confidence: float) -> float:
    """Exact chi-square quantile for 2 degrees of freedom (5.991 at 95%)."""
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")
    return -2.0 * math.log(1.0 - confidence)


def scaling_factors(a_orb: float) -> ScalingFactors:
    """gamma and eta for a given orbit semi-major axis.

    gamma = (1 / (1 - r_e/a)) * sqrt(mu / a^3)
    eta   = ((r_e/a) / (1 - r_e/a)) * (mu / a^2)

    When epochs disagree on a_orb the caller passes the mean radius.
    """
    if a_orb <= R_E_SPHERICAL:
        raise OrbitBelowSurface(f"a_orb = {a_orb} m is not above r_e")
    ratio = R_E_SPHERICAL / a_orb
    prefactor = 1.0 / (1.0 - ratio)
    gamma = prefactor * math.sqrt(MU_EARTH / a_orb ** 3)
    eta = ratio * prefactor * (MU_EARTH / a_orb ** 2)
    return ScalingFactors(gamma=gamma, eta=eta, a_orb=a_orb)


def scale_jacobian(J: np.ndarray, s: ScalingFactors) -> np.ndarray:
    """Divide position columns by gamma and the offset column by eta.

    Works for both the 5-state layout [x, y, z, clock, offset] and the
    reduced 4-state layout [h1, h2, clock, offset]; the clock column is
    already dimensionless in m/s-per-m/s.
    """
    k = J.shape[1]
    if k not in (4, 5):
        raise ValueError(f"expected 4 or 5 columns, got {k}")
    scaled = J.copy()
    scaled[:, :k - 2] /= s.gamma
    scaled[:, k - 1] /= s.eta
    return scaled


def ddop_covariance(J_scaled: np.ndarray, W) -> np.ndarray:
    """Covariance (H~^T W H~)^-1 of the scaled unknowns via eigen-factorization.

    Raises:
        SingularGeometry: near-singular normal matrix; the attached direction
            is the eigenvector of the smallest eigenvalue (the unobservable
            scaled combination).
    """
    W = np.asarray(W, dtype=float)
    w = np.diag(W) if W.ndim == 2 else W
    N = J_scaled.T @ (J_scaled * w[:, None])
    N = 0.5 * (N + N.T)
    eigvals, eigvecs = np.linalg.eigh(N)
    if eigvals[0] <= 0.0 or eigvals[-1] / eigvals[0] > _MAX_CONDITION:
        raise SingularGeometry(direction=eigvecs[:, 0])
    C = (eigvecs / eigvals) @ eigvecs.T
    return 0.5 * (C + C.T)


def ddop_metrics(C: np.ndarray, s: ScalingFactors, sigma_meas: float,
                 mode: str = HORIZONTAL_4STATE) -> DdopResult:
    """The four DDOP values plus dimensional 1-sigma errors.

    ``sigma_meas`` is the measurement sigma in m/s. In 4-state mode the
    vertical is constrained, so PDDOP is reported equal to HDDOP and the
    clock/offset entries sit at indices 2 and 3.
    """
    if mode == FULL_5STATE:
        pddop = math.sqrt(np.trace(C[0:3, 0:3]))
        hddop = math.sqrt(np.trace(C[0:2, 0:2]))
        cddop = math.sqrt(C[3, 3])
        tddop = math.sqrt(C[4, 4])
    else:
        hddop = math.sqrt(np.trace(C[0:2, 0:2]))
        pddop = hddop
        cddop = math.sqrt(C[2, 2])
        tddop = math.sqrt(C[3, 3])
    return DdopResult(
        covariance_scaled=C,
        pddop=pddop, hddop=hddop, cddop=cddop, tddop=tddop,
        position_sigma=pddop * sigma_meas / s.gamma,
        time_offset_sigma=tddop * sigma_meas / s.eta,
        drift_sigma=cddop * sigma_meas / C_LIGHT,
    )


def classify_dop(value: float) -> str:
    """Standard DOP rating label; boundaries belong to the better bucket."""
    if value < 0.0:
        raise ValueError("DOP value must be non-negative")
    if value <= 1.0:
        return "Ideal"
    if value <= 2.0:
        return "Excellent"
    if value <= 5.0:
        return "Good"
    if value <= 10.0:
        return "Fair"
    return "Poor"


def horizontal_covariance_m2(C: np.ndarray, rtn: RtnFrame, enu: EnuFrame,
                             sigma_meas: float, s: ScalingFactors,
                             ecef_z_constrained: bool = False) -> np.ndarray:
    """2x2 horizontal position covariance (m^2) in along/cross-track axes.

    The scaled position block is converted to meters with (sigma/gamma)^2 and
    rotated onto the orthonormalized horizontal projections of the RTN T and
    N axes. A 5-state ECEF block is first marginalized onto the ENU plane; a
    4-state block is taken as (east, north) unless ``ecef_z_constrained``,
    in which case it lives in the ECEF (x, y) plane and the axis projection
    is approximate away from the equator.
    """
    along, cross = horizontal_along_cross(rtn, enu)
    if C.shape[0] == 5:
        basis = np.column_stack([enu.east, enu.north])
        block = basis.T @ C[0:3, 0:3] @ basis
    elif ecef_z_constrained:
        basis = np.column_stack([np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])])
        block = C[0:2, 0:2]
    else:
        basis = np.column_stack([enu.east, enu.north])
        block = C[0:2, 0:2]
    axes = np.vstack([along @ basis, cross @ basis])
    cov = (sigma_meas / s.gamma) ** 2 * (axes @ block @ axes.T)
    return cov


def ellipse_from_covariance(cov: np.ndarray, confidence: float) -> ConfidenceEllipse:
    """Confidence ellipse of a 2x2 covariance, axes sqrt(chi2 * eigenvalue)."""
    cov = 0.5 * (cov + np.asarray(cov).T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[0] <= 0.0:
        raise DegenerateCovariance("horizontal covariance is rank-deficient")
    k = chi2_quantile_2dof(confidence)
    major = eigvecs[:, 1]
    # near-isotropic covariance has arbitrary axes; report orientation 0
    if (eigvals[1] - eigvals[0]) / eigvals[1] < 1e-12:
        orientation = 0.0
    else:
        orientation = math.atan2(major[1], major[0])
        if orientation <= -math.pi / 2.0:
            orientation += math.pi
        elif orientation > math.pi / 2.0:
            orientation -= math.pi
    return ConfidenceEllipse(
        semi_major=math.sqrt(k * eigvals[1]),
        semi_minor=math.sqrt(k * eigvals[0]),
        orientation=orientation,
        confidence=confidence,
    )


def theoretical_ellipse(C: np.ndarray, rtn: RtnFrame, enu: EnuFrame,
                        sigma_meas: float, s: ScalingFactors,
                        confidence: float = 0.95,
                        ecef_z_constrained: bool = False,
                        ) -> tuple[ConfidenceEllipse, float, float]:
    """Theoretical confidence ellipse plus the along/cross 1-sigma values (m)."""
    cov = horizontal_covariance_m2(C, rtn, enu, sigma_meas, s, ecef_z_constrained)
    ellipse = ellipse_from_covariance(cov, confidence)
    return ellipse, math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
