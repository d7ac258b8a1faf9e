"""Orbit sources: TLE/SGP4 propagation and synthetic circular passes.

All public state is expressed in an Earth-fixed (ECEF) frame. TLE output is
rotated from TEME using a Greenwich-sidereal-time rotation (no polar motion
or nutation), and velocity carries the frame-rotation transport term so a
static ECEF user sees the correct range rate. Acceleration for TLE sources
comes from central finite differencing of the ECEF velocity (0.5 s step);
synthetic circular sources use their closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from functools import cached_property
from typing import Union

import numpy as np

from .constants import (
    DEFAULT_MASK_ANGLE_DEG,
    MU_EARTH,
    OMEGA_EARTH,
    R_E_SPHERICAL,
    SECONDS_PER_DAY,
)
from .errors import (
    ChecksumMismatch,
    EpochOutOfRange,
    MalformedField,
    TargetUnreachable,
    TruncatedInput,
)
from . import _sgp4
from .geometry import GeodeticPosition, enu_frame, geodetic_to_ecef, max_elevation

TLE_LINE_LENGTH = 69
MAX_TLE_AGE_DAYS = 7.0
_ACCEL_FD_STEP = 0.5  # s


def _utc(t: datetime) -> datetime:
    if t.tzinfo is None:
        return t.replace(tzinfo=timezone.utc)
    return t.astimezone(timezone.utc)


def julian_date(t: datetime) -> tuple[float, float]:
    """Julian date of a UTC instant as (midnight JD, day fraction)."""
    t = _utc(t)
    jd_midnight = t.toordinal() + 1721424.5
    frac = (t.hour * 3600.0 + t.minute * 60.0 + t.second
            + t.microsecond * 1e-6) / SECONDS_PER_DAY
    return jd_midnight, frac


# fractional sidereal gain per UT1 day: (876600*3600 + 8640184.812866)/86400/36525 - 1
_GMST_RATE_FRAC = 0.002737909350795371


def gmst_radians(jd: float, frac) -> np.ndarray:
    """Greenwich mean sidereal time (IAU-82 polynomial), radians in [0, 2pi).

    The day count since J2000 is kept split into integer and fractional
    parts so whole revolutions drop out exactly; forming it as one float
    (or evaluating the polynomial naively) loses ~1e-7 s to cancellation,
    which is tens of microns of ECEF position.
    """
    f = np.asarray(frac, dtype=float)
    base = jd - 2451545.0        # exact half-integer for a midnight jd
    fi = np.floor(f)
    ff = f - fi
    whole = base + fi            # exact while |base| < 2^51
    wi = np.floor(whole)
    d_frac = (whole - wi) + ff
    carry = np.floor(d_frac)
    d_int = wi + carry
    d_frac = d_frac - carry
    tut1 = (d_int + d_frac) / 36525.0
    revs = (_GMST_RATE_FRAC * d_int + (1.0 + _GMST_RATE_FRAC) * d_frac
            + (67310.54841 + (0.093104 - 6.2e-6 * tut1) * tut1 ** 2) / 86400.0)
    return 2.0 * math.pi * np.remainder(revs, 1.0)


# --- TLE ingestion ----------------------------------------------------------

@dataclass(frozen=True)
class TleRecord:
    """Decoded two-line element set (angles in degrees, mean motion rev/day)."""

    name: str
    line1: str
    line2: str
    epoch: datetime
    mean_motion: float
    inclination_deg: float
    raan_deg: float
    eccentricity: float
    arg_perigee_deg: float
    mean_anomaly_deg: float
    bstar: float


def tle_checksum(line: str) -> int:
    """Modulo-10 checksum of the first 68 characters ('-' counts as 1)."""
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def _check_line(line: str, line_number: int, leading: str) -> None:
    if len(line) < TLE_LINE_LENGTH:
        raise TruncatedInput(
            f"line {line_number} has {len(line)} characters (need {TLE_LINE_LENGTH})")
    if len(line) > TLE_LINE_LENGTH:
        raise MalformedField("line", (1, TLE_LINE_LENGTH),
                             f"line {line_number} has {len(line)} characters")
    if line[0] != leading:
        raise MalformedField("line_number", (1, 1),
                             f"line {line_number} should start with '{leading}'")
    expected = line[68]
    if not expected.isdigit():
        raise MalformedField("checksum", (69, 69), f"non-digit {expected!r}")
    computed = tle_checksum(line)
    if computed != int(expected):
        raise ChecksumMismatch(line_number, int(expected), computed)


def _slice(line: str, start: int, end: int) -> str:
    # columns are the conventional 1-based inclusive TLE layout
    return line[start - 1:end]


def _parse_float(line: str, start: int, end: int, field: str) -> float:
    raw = _slice(line, start, end)
    try:
        return float(raw)
    except ValueError:
        raise MalformedField(field, (start, end), repr(raw.strip())) from None


def _parse_implied_exp(line: str, start: int, end: int, field: str) -> float:
    """Decode the 'sMMMMMsE' implied-decimal exponent field (e.g. bstar)."""
    raw = _slice(line, start, end)
    text = raw.strip()
    if not text or set(text) <= {"0", "+", "-"}:
        return 0.0
    try:
        sign = -1.0 if text[0] == "-" else 1.0
        if text[0] in "+-":
            text = text[1:]
        mantissa, exponent = text[:-2], text[-2:]
        return sign * float(f"0.{mantissa}e{int(exponent)}")
    except (ValueError, IndexError):
        raise MalformedField(field, (start, end), repr(raw.strip())) from None


def _parse_epoch(line: str) -> datetime:
    yy = int(_parse_float(line, 19, 20, "epoch_year"))
    day = _parse_float(line, 21, 32, "epoch_day")
    year = yy + (2000 if yy < 57 else 1900)
    return datetime(year, 1, 1, tzinfo=timezone.utc) + timedelta(days=day - 1.0)


def parse_tle(text: str) -> list[TleRecord]:
    """Parse concatenated 2-line or named 3-line TLE blocks.

    Raises:
        ChecksumMismatch, MalformedField, TruncatedInput
    """
    numbered = [(i + 1, ln.rstrip("\r\n")) for i, ln in enumerate(text.splitlines())]
    numbered = [(n, ln) for n, ln in numbered if ln.strip()]
    records = []
    i = 0
    while i < len(numbered):
        n0, first = numbered[i]
        if first.lstrip().startswith("1 ") and len(first.strip()) > 20:
            name = ""
            block = numbered[i:i + 2]
            i += 2
        else:
            name = first.strip()
            block = numbered[i + 1:i + 3]
            i += 3
        if len(block) < 2:
            raise TruncatedInput(f"TLE block starting at line {n0} is incomplete")
        (n1, line1), (n2, line2) = block
        _check_line(line1, n1, "1")
        _check_line(line2, n2, "2")
        if _slice(line1, 3, 7) != _slice(line2, 3, 7):
            raise MalformedField("catalog_number", (3, 7),
                                 "line 1 and line 2 disagree")

        inclination = _parse_float(line2, 9, 16, "inclination")
        eccentricity = float("0." + _slice(line2, 27, 33).strip())
        if not 0.0 <= eccentricity < 1.0:
            raise MalformedField("eccentricity", (27, 33), f"{eccentricity}")
        if not 0.0 <= inclination <= 180.0:
            raise MalformedField("inclination", (9, 16), f"{inclination}")

        records.append(TleRecord(
            name=name,
            line1=line1,
            line2=line2,
            epoch=_parse_epoch(line1),
            mean_motion=_parse_float(line2, 53, 63, "mean_motion"),
            inclination_deg=inclination,
            raan_deg=_parse_float(line2, 18, 25, "raan"),
            eccentricity=eccentricity,
            arg_perigee_deg=_parse_float(line2, 35, 42, "arg_perigee"),
            mean_anomaly_deg=_parse_float(line2, 44, 51, "mean_anomaly"),
            bstar=_parse_implied_exp(line1, 54, 61, "bstar"),
        ))
    return records


# --- orbit sources ------------------------------------------------------------

@dataclass(frozen=True)
class SatelliteState:
    """Satellite position/velocity/acceleration in ECEF at an epoch."""

    epoch: datetime
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray


@dataclass(frozen=True)
class TlePropagated:
    """SGP4-propagated orbit from a parsed TLE."""

    tle: TleRecord

    @cached_property
    def _params(self) -> _sgp4.Sgp4Params:
        t = self.tle
        no_kozai = t.mean_motion * 2.0 * math.pi / 1440.0  # rev/day -> rad/min
        return _sgp4.sgp4_init(
            no_kozai=no_kozai,
            ecco=t.eccentricity,
            inclo=math.radians(t.inclination_deg),
            nodeo=math.radians(t.raan_deg),
            argpo=math.radians(t.arg_perigee_deg),
            mo=math.radians(t.mean_anomaly_deg),
            bstar=t.bstar,
        )


@dataclass(frozen=True)
class SyntheticCircular:
    """Two-body circular pass anchored near a ground point.

    The satellite crosses its closest approach at ``reference_epoch``.
    ``inclination_to_user_deg`` is the azimuth of its motion there (degrees
    clockwise from north at the anchor); ``ground_track_offset`` displaces
    the ground track laterally, positive to the right of the motion
    direction. Offset 0 puts the satellite exactly overhead.
    """

    altitude: float
    inclination_to_user_deg: float
    ground_track_offset: float
    reference_epoch: datetime
    anchor: GeodeticPosition

    def __post_init__(self):
        if not 300e3 <= self.altitude <= 2000e3:
            raise ValueError(f"altitude {self.altitude} outside [300e3, 2000e3] m")

    @cached_property
    def _basis(self) -> tuple[np.ndarray, np.ndarray, float]:
        """(radial unit, along unit, orbit radius) at closest approach."""
        frame = enu_frame(self.anchor)
        user = frame.origin_ecef
        radius = R_E_SPHERICAL + self.altitude

        # intersection of the local up ray with the orbit sphere
        b = 2.0 * float(user @ frame.up)
        c = float(user @ user) - radius * radius
        k = (-b + math.sqrt(b * b - 4.0 * c)) / 2.0
        c_hat = (user + k * frame.up)
        c_hat = c_hat / np.linalg.norm(c_hat)

        az = math.radians(self.inclination_to_user_deg)
        t_dir = math.sin(az) * frame.east + math.cos(az) * frame.north
        t_hat = t_dir - (t_dir @ c_hat) * c_hat
        t_hat = t_hat / np.linalg.norm(t_hat)

        # tilt the plane about the track direction to realize the offset
        psi = self.ground_track_offset / R_E_SPHERICAL
        right = np.cross(t_hat, c_hat)
        c_hat = math.cos(psi) * c_hat + math.sin(psi) * right
        return c_hat, t_hat, radius


OrbitSource = Union[TlePropagated, SyntheticCircular]


def reference_epoch(source: OrbitSource) -> datetime:
    if isinstance(source, TlePropagated):
        return source.tle.epoch
    return _utc(source.reference_epoch)


def seconds_since_reference(source: OrbitSource, t: datetime) -> float:
    return (_utc(t) - reference_epoch(source)).total_seconds()


def _rotate_teme_to_ecef(r_teme: np.ndarray, v_teme: np.ndarray,
                         gmst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cg = np.cos(gmst)
    sg = np.sin(gmst)
    x, y, z = r_teme[:, 0], r_teme[:, 1], r_teme[:, 2]
    pos = np.stack([cg * x + sg * y, -sg * x + cg * y, z], axis=-1)
    vx, vy, vz = v_teme[:, 0], v_teme[:, 1], v_teme[:, 2]
    vrot = np.stack([cg * vx + sg * vy, -sg * vx + cg * vy, vz], axis=-1)
    # transport term: v_ecef = R v_teme - omega x r_ecef
    omega_cross = np.stack([-OMEGA_EARTH * pos[:, 1],
                            OMEGA_EARTH * pos[:, 0],
                            np.zeros_like(z)], axis=-1)
    return pos, vrot - omega_cross


def positions_velocities(source: OrbitSource, tsec: np.ndarray,
                         check_window: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """ECEF position (m) and velocity (m/s) at seconds past the source reference."""
    tsec = np.asarray(tsec, dtype=float)
    if isinstance(source, TlePropagated):
        if check_window and np.any(np.abs(tsec) > MAX_TLE_AGE_DAYS * SECONDS_PER_DAY):
            raise EpochOutOfRange(
                f"requested epoch further than {MAX_TLE_AGE_DAYS} days from TLE epoch")
        r_km, v_kmps = _sgp4.sgp4_propagate(source._params, tsec / 60.0)
        jd, fr = julian_date(source.tle.epoch)
        gmst = gmst_radians(jd, fr + tsec / SECONDS_PER_DAY)
        return _rotate_teme_to_ecef(r_km * 1000.0, v_kmps * 1000.0, gmst)

    c_hat, t_hat, radius = source._basis
    n = math.sqrt(MU_EARTH / radius ** 3)
    phase = n * tsec
    r_i = radius * (np.outer(np.cos(phase), c_hat) + np.outer(np.sin(phase), t_hat))
    v_i = radius * n * (np.outer(-np.sin(phase), c_hat) + np.outer(np.cos(phase), t_hat))
    theta = OMEGA_EARTH * tsec
    return _rotate_teme_to_ecef(r_i, v_i, theta)


def states_at(source: OrbitSource, tsec: np.ndarray
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Position, velocity and acceleration arrays at seconds past reference."""
    tsec = np.asarray(tsec, dtype=float)
    if isinstance(source, TlePropagated):
        stacked = np.concatenate([tsec, tsec + _ACCEL_FD_STEP, tsec - _ACCEL_FD_STEP])
        pos_all, vel_all = positions_velocities(source, stacked, check_window=False)
        if np.any(np.abs(tsec) > MAX_TLE_AGE_DAYS * SECONDS_PER_DAY):
            raise EpochOutOfRange(
                f"requested epoch further than {MAX_TLE_AGE_DAYS} days from TLE epoch")
        m = len(tsec)
        acc = (vel_all[m:2 * m] - vel_all[2 * m:]) / (2.0 * _ACCEL_FD_STEP)
        return pos_all[:m], vel_all[:m], acc

    pos, vel = positions_velocities(source, tsec)
    c_hat, t_hat, radius = source._basis
    n = math.sqrt(MU_EARTH / radius ** 3)
    phase = n * tsec
    r_i = radius * (np.outer(np.cos(phase), c_hat) + np.outer(np.sin(phase), t_hat))
    v_i = radius * n * (np.outer(-np.sin(phase), c_hat) + np.outer(np.cos(phase), t_hat))
    a_i = -(MU_EARTH / radius ** 3) * r_i
    theta = OMEGA_EARTH * tsec
    cg, sg = np.cos(theta), np.sin(theta)
    a_rot = np.stack([cg * a_i[:, 0] + sg * a_i[:, 1],
                      -sg * a_i[:, 0] + cg * a_i[:, 1],
                      a_i[:, 2]], axis=-1)
    omega = np.array([0.0, 0.0, OMEGA_EARTH])
    acc = a_rot - 2.0 * np.cross(omega, vel) - np.cross(omega, np.cross(omega, pos))
    return pos, vel, acc


def propagate(source: OrbitSource, t: datetime) -> SatelliteState:
    """Earth-fixed satellite state (with acceleration) at a UTC instant."""
    tsec = seconds_since_reference(source, t)
    pos, vel, acc = states_at(source, np.array([tsec]))
    return SatelliteState(epoch=_utc(t), position=pos[0],
                          velocity=vel[0], acceleration=acc[0])


def propagate_with_offset(source: OrbitSource, t: datetime,
                          delta_c: float) -> SatelliteState:
    """State at t - delta_c: the only place the time offset enters the model."""
    if abs(delta_c) >= 10.0:
        raise EpochOutOfRange(f"|delta_c| = {abs(delta_c)} s exceeds the 10 s guard")
    return propagate(source, _utc(t) - timedelta(seconds=delta_c))


def synthesize_pass(user: GeodeticPosition, altitude: float,
                    max_elevation_target_deg: float, reference_epoch: datetime,
                    pass_azimuth_deg: float = 0.0,
                    mask_angle_deg: float = DEFAULT_MASK_ANGLE_DEG,
                    ) -> SyntheticCircular:
    """Synthetic circular pass achieving a target maximum elevation (±0.5 deg).

    The lateral ground-track offset is bisected until a dense elevation
    search over the pass matches the target.

    Raises:
        TargetUnreachable: target at or below the mask angle.
    """
    if not 0.0 < max_elevation_target_deg <= 90.0:
        raise ValueError("target maximum elevation must be in (0, 90] degrees")
    if max_elevation_target_deg <= mask_angle_deg:
        raise TargetUnreachable(
            f"target {max_elevation_target_deg} deg is below the "
            f"{mask_angle_deg} deg mask angle")

    def build(offset: float) -> SyntheticCircular:
        return SyntheticCircular(
            altitude=altitude,
            inclination_to_user_deg=pass_azimuth_deg,
            ground_track_offset=offset,
            reference_epoch=reference_epoch,
            anchor=user,
        )

    # half the above-horizon arc bounds the useful lateral offset
    half_window = 1.2 * math.acos(R_E_SPHERICAL / (R_E_SPHERICAL + altitude)) \
        / math.sqrt(MU_EARTH / (R_E_SPHERICAL + altitude) ** 3)
    window = (reference_epoch - timedelta(seconds=half_window),
              reference_epoch + timedelta(seconds=half_window))

    def realized(offset: float) -> float:
        from .errors import NoPassInWindow
        try:
            return max_elevation(build(offset), user, window, mask_angle_deg=0.0)
        except NoPassInWindow:
            return 0.0

    if max_elevation_target_deg > 89.5:
        return build(0.0)

    lo, hi = 0.0, 200e3
    while realized(hi) > max_elevation_target_deg:
        lo = hi
        hi *= 2.0
        if hi > 0.6 * math.pi * R_E_SPHERICAL:
            raise TargetUnreachable(
                f"no offset realizes max elevation {max_elevation_target_deg} deg")
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        elev = realized(mid)
        if abs(elev - max_elevation_target_deg) < 0.1:
            return build(mid)
        if elev > max_elevation_target_deg:
            lo = mid
        else:
            hi = mid
    return build(0.5 * (lo + hi))
