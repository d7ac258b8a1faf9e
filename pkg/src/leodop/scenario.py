"""Scenario configuration: flat key = value files driving the CLI.

A scenario pins the orbit source, user location, observation window, noise
and solver settings. Unknown keys are rejected (with a suggestion), missing
required keys and out-of-range values raise ValidationError, and omitted
optional keys fall back to documented defaults.

Recognized keys::

    tle_file                  path to a TLE file, relative to the scenario file
    satellite                 name of the TLE record to use (default: first)
    orbit                     'tle' (default) or 'synthetic'
    synthetic_altitude_m      circular orbit altitude (synthetic only)
    synthetic_pass_azimuth_deg  pass direction at closest approach
    synthetic_ground_offset_m   lateral ground-track offset
    user_lat_deg / user_lon_deg / user_height_m   receiver position
    window_start              ISO-8601 UTC instant
    window_duration_s         observation span
    sample_period_s           epoch spacing
    sigma_dopp_mps            measurement noise sigma (m/s)
    elevation_scaled_noise    true/false
    seed                      base RNG seed
    solver_mode               'horizontal4' or 'full5'
    vertical_constraint       'ecef_z' or 'local_up'
    max_iterations / step_tolerance
    carrier_wavelength_m
    mask_angle_deg
    truth_clock_drift_mps     simulated receiver clock drift (c * ddelta_d)
    truth_time_offset_s       simulated along-track time offset delta_c
"""

from __future__ import annotations

import difflib
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from .constants import DEFAULT_MASK_ANGLE_DEG, DEFAULT_WAVELENGTH
from .doppler import NoiseModel
from .errors import ParseError, UnknownKey, ValidationError
from .estimator import (
    FULL_5STATE,
    HORIZONTAL_4STATE,
    SolverConfig,
    StateVector,
    VERTICAL_ECEF_Z,
    VERTICAL_LOCAL_UP,
)
from .geometry import GeodeticPosition, geodetic_to_ecef
from .orbit import OrbitSource, SyntheticCircular, TlePropagated, parse_tle


@dataclass(frozen=True)
class Scenario:
    """Fully validated simulation scenario."""

    source: OrbitSource
    user: GeodeticPosition
    window_start: datetime
    window_duration_s: float
    sample_period_s: float
    noise: NoiseModel
    solver: SolverConfig
    carrier_wavelength: float = DEFAULT_WAVELENGTH
    mask_angle_deg: float = DEFAULT_MASK_ANGLE_DEG
    truth_clock_drift_mps: float = 0.0
    truth_time_offset_s: float = 0.0
    satellite_name: str = ""

    @property
    def window(self) -> tuple[datetime, datetime]:
        return (self.window_start,
                self.window_start + timedelta(seconds=self.window_duration_s))

    @property
    def epochs(self) -> list[datetime]:
        offsets = np.arange(0.0, self.window_duration_s, self.sample_period_s)
        return [self.window_start + timedelta(seconds=float(s)) for s in offsets]

    @property
    def truth(self) -> StateVector:
        return StateVector(
            position_ecef=geodetic_to_ecef(self.user),
            clock_drift_scaled=self.truth_clock_drift_mps,
            time_offset=self.truth_time_offset_s,
        )

    def describe(self) -> str:
        """Effective settings, one key per line (defaults included)."""
        sat = self.satellite_name or "(first record)"
        orbit_lines = [f"satellite = {sat}"] if isinstance(self.source, TlePropagated) \
            else [f"synthetic_altitude_m = {self.source.altitude:g}",
                  f"synthetic_pass_azimuth_deg = {self.source.inclination_to_user_deg:g}",
                  f"synthetic_ground_offset_m = {self.source.ground_track_offset:g}"]
        lines = [
            f"orbit = {'tle' if isinstance(self.source, TlePropagated) else 'synthetic'}",
            *orbit_lines,
            f"user_lat_deg = {self.user.latitude:g}",
            f"user_lon_deg = {self.user.longitude:g}",
            f"user_height_m = {self.user.height:g}",
            f"window_start = {self.window_start.isoformat()}",
            f"window_duration_s = {self.window_duration_s:g}",
            f"sample_period_s = {self.sample_period_s:g}",
            f"sigma_dopp_mps = {self.noise.sigma_dopp:g}",
            f"elevation_scaled_noise = {str(self.noise.elevation_scaled).lower()}",
            f"seed = {self.noise.seed}",
            f"solver_mode = {self.solver.mode}",
            f"vertical_constraint = {self.solver.vertical_constraint}",
            f"max_iterations = {self.solver.max_iterations}",
            f"step_tolerance = {self.solver.step_tolerance:g}",
            f"carrier_wavelength_m = {self.carrier_wavelength!r}",
            f"mask_angle_deg = {self.mask_angle_deg:g}",
            f"truth_clock_drift_mps = {self.truth_clock_drift_mps:g}",
            f"truth_time_offset_s = {self.truth_time_offset_s:g}",
        ]
        return "\n".join(lines)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_instant(text: str) -> datetime:
    t = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if t.tzinfo is None:
        t = t.replace(tzinfo=timezone.utc)
    return t.astimezone(timezone.utc)


_KEY_PARSERS = {
    "tle_file": str,
    "satellite": str,
    "orbit": str,
    "synthetic_altitude_m": float,
    "synthetic_pass_azimuth_deg": float,
    "synthetic_ground_offset_m": float,
    "user_lat_deg": float,
    "user_lon_deg": float,
    "user_height_m": float,
    "window_start": _parse_instant,
    "window_duration_s": float,
    "sample_period_s": float,
    "sigma_dopp_mps": float,
    "elevation_scaled_noise": _parse_bool,
    "seed": int,
    "solver_mode": str,
    "vertical_constraint": str,
    "max_iterations": int,
    "step_tolerance": float,
    "carrier_wavelength_m": float,
    "mask_angle_deg": float,
    "truth_clock_drift_mps": float,
    "truth_time_offset_s": float,
}

_REQUIRED = ("user_lat_deg", "user_lon_deg", "window_start")


def _parse_config_text(text: str) -> dict:
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(line_no, raw.strip())
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_PARSERS:
            matches = difflib.get_close_matches(key, _KEY_PARSERS, n=1)
            raise UnknownKey(key, matches[0] if matches else None)
        try:
            values[key] = _KEY_PARSERS[key](value)
        except (ValueError, TypeError) as exc:
            raise ValidationError(key, str(exc)) from None
    return values


def _build_source(values: dict, base_dir: Path, user: GeodeticPosition,
                  window_start: datetime, duration: float) -> tuple[OrbitSource, str]:
    kind = values.get("orbit", "tle" if "tle_file" in values else None)
    if kind == "synthetic":
        altitude = values.get("synthetic_altitude_m", 715e3)
        try:
            source = SyntheticCircular(
                altitude=altitude,
                inclination_to_user_deg=values.get("synthetic_pass_azimuth_deg", 0.0),
                ground_track_offset=values.get("synthetic_ground_offset_m", 0.0),
                reference_epoch=window_start + timedelta(seconds=duration / 2.0),
                anchor=user,
            )
        except ValueError as exc:
            raise ValidationError("synthetic_altitude_m", str(exc)) from None
        return source, ""
    if kind != "tle" and kind is not None:
        raise ValidationError("orbit", f"must be 'tle' or 'synthetic', got {kind!r}")
    if "tle_file" not in values:
        raise ValidationError("tle_file", "missing (required for a TLE scenario)")
    tle_path = base_dir / values["tle_file"]
    try:
        records = parse_tle(tle_path.read_text())
    except OSError as exc:
        raise ValidationError("tle_file", str(exc)) from None
    if not records:
        raise ValidationError("tle_file", "contains no TLE records")
    name = values.get("satellite", "")
    if name:
        matching = [r for r in records if r.name.strip().lower() == name.strip().lower()]
        if not matching:
            raise ValidationError("satellite", f"no TLE record named {name!r}")
        record = matching[0]
    else:
        record = records[0]
    return TlePropagated(record), record.name


def scenario_from_values(values: dict, base_dir: Path) -> Scenario:
    for key in _REQUIRED:
        if key not in values:
            raise ValidationError(key, "missing required key")

    lat = values["user_lat_deg"]
    lon = values["user_lon_deg"]
    height = values.get("user_height_m", 0.0)
    try:
        user = GeodeticPosition(lat, lon, height)
    except ValueError as exc:
        raise ValidationError("user_lat_deg", str(exc)) from None
    if not -500.0 <= height <= 10000.0:
        raise ValidationError("user_height_m", f"{height} outside [-500, 10000] m")

    duration = values.get("window_duration_s", 350.0)
    period = values.get("sample_period_s", 1.0)
    if duration <= 0.0:
        raise ValidationError("window_duration_s", "must be positive")
    if period <= 0.0:
        raise ValidationError("sample_period_s", "must be positive")

    sigma = values.get("sigma_dopp_mps", 0.5)
    if sigma < 0.0:
        raise ValidationError("sigma_dopp_mps", "must be non-negative")

    mode = values.get("solver_mode", HORIZONTAL_4STATE)
    if mode not in (HORIZONTAL_4STATE, FULL_5STATE):
        raise ValidationError("solver_mode", f"must be 'horizontal4' or 'full5', got {mode!r}")
    vconst = values.get("vertical_constraint", VERTICAL_ECEF_Z)
    if vconst not in (VERTICAL_ECEF_Z, VERTICAL_LOCAL_UP):
        raise ValidationError("vertical_constraint",
                              f"must be 'ecef_z' or 'local_up', got {vconst!r}")
    try:
        solver = SolverConfig(
            max_iterations=values.get("max_iterations", 25),
            step_tolerance=values.get("step_tolerance", 1e-4),
            mode=mode,
            vertical_constraint=vconst,
        )
    except ValueError as exc:
        raise ValidationError("max_iterations", str(exc)) from None

    window_start = values["window_start"]
    source, sat_name = _build_source(values, base_dir, user, window_start, duration)

    wavelength = values.get("carrier_wavelength_m", DEFAULT_WAVELENGTH)
    if wavelength <= 0.0:
        raise ValidationError("carrier_wavelength_m", "must be positive")
    mask = values.get("mask_angle_deg", DEFAULT_MASK_ANGLE_DEG)
    if not 0.0 <= mask < 90.0:
        raise ValidationError("mask_angle_deg", f"{mask} outside [0, 90)")

    return Scenario(
        source=source,
        user=user,
        window_start=window_start,
        window_duration_s=duration,
        sample_period_s=period,
        noise=NoiseModel(sigma_dopp=sigma,
                         elevation_scaled=values.get("elevation_scaled_noise", True),
                         seed=values.get("seed", 0)),
        solver=solver,
        carrier_wavelength=wavelength,
        mask_angle_deg=mask,
        truth_clock_drift_mps=values.get("truth_clock_drift_mps", 0.0),
        truth_time_offset_s=values.get("truth_time_offset_s", 0.0),
        satellite_name=sat_name,
    )


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file.

    Raises:
        ParseError, UnknownKey, ValidationError
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError("scenario", str(exc)) from None
    values = _parse_config_text(text)
    return scenario_from_values(values, path.parent)


def default_scenario() -> Scenario:
    """The packaged fixture: the pinned Orbcomm-like pass over Barcelona."""
    data = resources.files("leodop") / "data"
    values = _parse_config_text((data / "default_scenario.cfg").read_text())
    with resources.as_file(data) as base_dir:
        return scenario_from_values(values, Path(base_dir))
