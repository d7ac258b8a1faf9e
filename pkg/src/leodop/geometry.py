"""Coordinate frames and pass geometry.

Geodetic/ECEF/ENU conversions on the WGS-84 ellipsoid, elevation/azimuth,
the satellite RTN triad, and the closest-approach / maximum-elevation
searches used to anchor observation windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import TYPE_CHECKING

import numpy as np

from .constants import DEFAULT_MASK_ANGLE_DEG, WGS84_A, WGS84_B, WGS84_E2
from .errors import DegenerateState, MultipleMinima, NearSingularOrigin, NoPassInWindow

if TYPE_CHECKING:
    from .orbit import OrbitSource, SatelliteState

_CORE_GUARD_M = 6.3e6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GeodeticPosition:
    """Geodetic coordinates on the WGS-84 ellipsoid (degrees, degrees, m)."""

    latitude: float
    longitude: float
    height: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass(frozen=True)
class EnuFrame:
    """Local east/north/up triad anchored at an ECEF origin."""

    origin_ecef: np.ndarray
    east: np.ndarray
    north: np.ndarray
    up: np.ndarray

    def rotation(self) -> np.ndarray:
        """Rows are east, north, up: maps ECEF offsets to ENU components."""
        return np.vstack([self.east, self.north, self.up])


@dataclass(frozen=True)
class RtnFrame:
    """Radial / along-track / cross-track triad of a satellite state."""

    r_axis: np.ndarray
    t_axis: np.ndarray
    n_axis: np.ndarray


def geodetic_to_ecef(g: GeodeticPosition) -> np.ndarray:
    """WGS-84 forward conversion to ECEF meters."""
    lat = math.radians(g.latitude)
    lon = math.radians(g.longitude)
    slat, clat = math.sin(lat), math.cos(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * slat * slat)
    return np.array([
        (n + g.height) * clat * math.cos(lon),
        (n + g.height) * clat * math.sin(lon),
        (n * (1.0 - WGS84_E2) + g.height) * slat,
    ])


def ecef_to_geodetic(p) -> GeodeticPosition:
    """Inverse conversion via fixed-point latitude iteration (to 1e-12 rad)."""
    p = np.asarray(p, dtype=float)
    if np.linalg.norm(p) < _CORE_GUARD_M:
        raise NearSingularOrigin(
            f"|p| = {np.linalg.norm(p):.0f} m is below the Earth core guard")
    x, y, z = p
    lon = math.atan2(y, x)
    rho = math.hypot(x, y)
    if rho < 1.0:
        # polar axis: latitude sign from z, height from the semi-minor axis
        lat = math.copysign(math.pi / 2.0, z)
        return GeodeticPosition(math.degrees(lat), math.degrees(lon),
                                abs(z) - WGS84_B)
    lat = math.atan2(z, rho * (1.0 - WGS84_E2))
    height = 0.0
    for _ in range(25):
        slat = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * slat * slat)
        height = rho / math.cos(lat) - n
        new_lat = math.atan2(z, rho * (1.0 - WGS84_E2 * n / (n + height)))
        if abs(new_lat - lat) < 1e-12:
            lat = new_lat
            break
        lat = new_lat
    return GeodeticPosition(math.degrees(lat), math.degrees(lon), height)


def enu_frame(g: GeodeticPosition) -> EnuFrame:
    lat = math.radians(g.latitude)
    lon = math.radians(g.longitude)
    slat, clat = math.sin(lat), math.cos(lat)
    slon, clon = math.sin(lon), math.cos(lon)
    east = np.array([-slon, clon, 0.0])
    north = np.array([-slat * clon, -slat * slon, clat])
    up = np.array([clat * clon, clat * slon, slat])
    return EnuFrame(origin_ecef=geodetic_to_ecef(g), east=east, north=north, up=up)


def elevation_azimuth(user_ecef, sat_ecef) -> tuple[float, float]:
    """Elevation and azimuth (degrees) of the satellite as seen by the user.

    Azimuth is measured clockwise from north; a satellite at zenith returns
    azimuth 0 by convention.
    """
    frame = enu_frame(ecef_to_geodetic(user_ecef))
    los = np.asarray(sat_ecef, dtype=float) - np.asarray(user_ecef, dtype=float)
    los = los / np.linalg.norm(los)
    e = float(los @ frame.east)
    n = float(los @ frame.north)
    u = float(los @ frame.up)
    elevation = math.degrees(math.asin(max(-1.0, min(1.0, u))))
    if math.hypot(e, n) < 1e-9:
        return elevation, 0.0
    azimuth = math.degrees(math.atan2(e, n)) % 360.0
    return elevation, azimuth


def elevations_deg(frame: EnuFrame, sat_pos: np.ndarray) -> np.ndarray:
    """Vectorized elevations (degrees) for an (N, 3) satellite position array."""
    los = sat_pos - frame.origin_ecef
    u = los @ frame.up
    return np.degrees(np.arcsin(np.clip(u / np.linalg.norm(los, axis=1), -1.0, 1.0)))


def rtn_frame(state: "SatelliteState") -> RtnFrame:
    """RTN triad: R radial, N along orbit normal, T completing (near velocity)."""
    r = np.asarray(state.position, dtype=float)
    v = np.asarray(state.velocity, dtype=float)
    cross = np.cross(r, v)
    norm_cross = np.linalg.norm(cross)
    if norm_cross < 1e-3 * np.linalg.norm(r) * np.linalg.norm(v):
        raise DegenerateState("position and velocity are (near-)parallel")
    r_axis = r / np.linalg.norm(r)
    n_axis = cross / norm_cross
    t_axis = np.cross(n_axis, r_axis)
    return RtnFrame(r_axis=r_axis, t_axis=t_axis, n_axis=n_axis)


def horizontal_along_cross(rtn: RtnFrame, enu: EnuFrame) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal horizontal along/cross axes (ECEF 3-vectors).

    The along axis is the renormalized horizontal projection of T; the cross
    axis is its 90-degree rotation in the horizontal plane, sign-matched to
    the projection of N so the pair stays exactly orthonormal.
    """
    t_h = rtn.t_axis - (rtn.t_axis @ enu.up) * enu.up
    norm = np.linalg.norm(t_h)
    if norm < 1e-9:
        raise DegenerateState("along-track axis is vertical at this geometry")
    along = t_h / norm
    cross = np.cross(enu.up, along)
    if cross @ rtn.n_axis < 0.0:
        cross = -cross
    return along, cross


def _golden_minimize(f, a: float, b: float, xtol: float) -> float:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _scan_extremum(source: "OrbitSource", user: GeodeticPosition,
                   window: tuple[datetime, datetime], metric: str,
                   mask_angle_deg: float) -> tuple[datetime, float]:
    """Shared coarse-scan + golden refinement for range min / elevation max."""
    from . import orbit

    t0, t1 = window
    span = (t1 - t0).total_seconds()
    if span <= 2.0:
        raise NoPassInWindow("window shorter than the coarse scan step")
    user_ecef = geodetic_to_ecef(user)
    frame = enu_frame(user)
    base = orbit.seconds_since_reference(source, t0)
    ts = base + np.arange(0.0, span + 0.5, 1.0)
    pos, _ = orbit.positions_velocities(source, ts)

    if metric == "range":
        series = np.linalg.norm(pos - user_ecef, axis=1)
    else:
        series = -elevations_deg(frame, pos)

    interior = np.nonzero((series[1:-1] <= series[:-2])
                          & (series[1:-1] < series[2:]))[0] + 1
    if len(interior) == 0:
        raise NoPassInWindow("no interior extremum in the window")
    if len(interior) > 1:
        raise MultipleMinima(
            f"{len(interior)} candidate passes in window; narrow it to one")
    i = int(interior[0])

    def f(tsec: float) -> float:
        p, _ = orbit.positions_velocities(source, np.array([tsec]))
        if metric == "range":
            return float(np.linalg.norm(p[0] - user_ecef))
        return -float(elevations_deg(frame, p)[0])

    t_best = _golden_minimize(f, ts[i - 1], ts[i + 1], 0.001)
    p, _ = orbit.positions_velocities(source, np.array([t_best]))
    elev = float(elevations_deg(frame, p)[0])
    if elev < mask_angle_deg:
        raise NoPassInWindow(
            f"best elevation {elev:.2f} deg is below the {mask_angle_deg} deg mask")
    epoch = orbit.reference_epoch(source) + timedelta(seconds=t_best)
    return epoch, elev


def closest_approach(source: "OrbitSource", user: GeodeticPosition,
                     window: tuple[datetime, datetime],
                     mask_angle_deg: float = DEFAULT_MASK_ANGLE_DEG) -> datetime:
    """Epoch of minimum satellite-user range, located to 0.01 s."""
    epoch, _ = _scan_extremum(source, user, window, "range", mask_angle_deg)
    return epoch


def max_elevation(source: "OrbitSource", user: GeodeticPosition,
                  window: tuple[datetime, datetime],
                  mask_angle_deg: float = DEFAULT_MASK_ANGLE_DEG) -> float:
    """Maximum elevation (degrees) reached over the window's single pass."""
    _, elev = _scan_extremum(source, user, window, "elevation", mask_angle_deg)
    return elev


def max_elevation_epoch(source: "OrbitSource", user: GeodeticPosition,
                        window: tuple[datetime, datetime],
                        mask_angle_deg: float = DEFAULT_MASK_ANGLE_DEG,
                        ) -> tuple[datetime, float]:
    """Epoch and value of the elevation maximum (same search as max_elevation)."""
    return _scan_extremum(source, user, window, "elevation", mask_angle_deg)
