"""Geometry sensitivity sweeps, emitted as deterministic CSV datasets.

Each sweep evaluates the DDOP error theory (no Monte Carlo noise) over one
varied parameter and reports the 95% error-ellipse axes in the along/cross
sense plus HDDOP. Near-singular geometries are clamped at 1e9 m and flagged
rather than dropped, and invisible grid nodes are kept as explicit rows.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from datetime import datetime, timedelta

import numpy as np

from .constants import R_E_SPHERICAL
from .ddop import chi2_quantile_2dof
from .errors import (
    EmptyGrid,
    PassExceeded,
    SingularGeometry,
    TargetUnreachable,
    WindowNotVisible,
)
from .geometry import (
    GeodeticPosition,
    closest_approach,
    ecef_to_geodetic,
    elevations_deg,
    enu_frame,
    geodetic_to_ecef,
)
from .montecarlo import pass_theory
from .orbit import positions_velocities, seconds_since_reference, synthesize_pass
from .scenario import Scenario

CLAMP_ERROR_M = 1e9

DEFAULT_COUNTS = (4, 10, 20, 50, 100, 200, 350)
DEFAULT_INTERVALS_S = tuple(float(v) for v in range(10, 90, 10))
DEFAULT_OFFSETS_S = tuple(float(v) for v in range(-150, 160, 10))
DEFAULT_MAX_ELEVATIONS_DEG = tuple(float(v) for v in range(10, 95, 5))

ERROR_LEVEL_95 = "axis95"
ERROR_LEVEL_1SIGMA = "axis1sigma"


@dataclass(frozen=True)
class SweepRecord:
    """One sweep output row; errors are confidence-ellipse axis values (m)."""

    parameter_name: str
    parameter_value: float
    along_error_m: float
    cross_error_m: float
    hddop: float
    series: str = ""
    error_level: str = ERROR_LEVEL_95
    flag: str = ""


@dataclass(frozen=True)
class GridRecord:
    latitude: float
    longitude: float
    along_error_m: float
    cross_error_m: float
    visible: bool
    clamped: bool = False


def _level_scale(error_level: str) -> float:
    if error_level == ERROR_LEVEL_95:
        return 1.0
    if error_level == ERROR_LEVEL_1SIGMA:
        return 1.0 / math.sqrt(chi2_quantile_2dof(0.95))
    raise ValueError(f"unknown error level {error_level!r}")


def _check_visibility(scenario: Scenario, epochs, error):
    tsec = np.array([seconds_since_reference(scenario.source, t) for t in epochs])
    pos, _ = positions_velocities(scenario.source, tsec)
    elev = elevations_deg(enu_frame(scenario.user), pos)
    if np.any(elev < scenario.mask_angle_deg):
        raise error(
            f"elevation {elev.min():.2f} deg below mask {scenario.mask_angle_deg} deg")


def _theory_record(scenario: Scenario, epochs, name: str, value: float,
                   error_level: str, series: str = "") -> SweepRecord:
    scale = _level_scale(error_level)
    try:
        theory = pass_theory(scenario, epochs=epochs)
    except SingularGeometry:
        return SweepRecord(parameter_name=name, parameter_value=value,
                           along_error_m=CLAMP_ERROR_M, cross_error_m=CLAMP_ERROR_M,
                           hddop=float("inf"), series=series,
                           error_level=error_level, flag="singular")
    along = theory.along_error * scale
    cross = theory.cross_error * scale
    flag = ""
    if cross > CLAMP_ERROR_M or along > CLAMP_ERROR_M:
        along = min(along, CLAMP_ERROR_M)
        cross = min(cross, CLAMP_ERROR_M)
        flag = "clamped"
    return SweepRecord(parameter_name=name, parameter_value=value,
                       along_error_m=along, cross_error_m=cross,
                       hddop=theory.metrics.hddop, series=series,
                       error_level=error_level, flag=flag)


def sweep_observation_count(scenario: Scenario, counts=DEFAULT_COUNTS,
                            error_level: str = ERROR_LEVEL_95) -> list[SweepRecord]:
    """Vary how many epochs are spread uniformly over the fixed window."""
    records = []
    last = scenario.window_duration_s - scenario.sample_period_s
    for n in counts:
        if n < 4:
            raise ValueError("at least 4 observations are required")
        offsets = np.linspace(0.0, last, int(n))
        epochs = [scenario.window_start + timedelta(seconds=float(s)) for s in offsets]
        _check_visibility(scenario, epochs, WindowNotVisible)
        records.append(_theory_record(scenario, epochs, "observation_count",
                                      float(n), error_level))
    return records


def sweep_sampling_time(scenario: Scenario, intervals_s=DEFAULT_INTERVALS_S,
                        error_level: str = ERROR_LEVEL_95) -> list[SweepRecord]:
    """Four observations from the window start at a varied spacing."""
    records = []
    for dt in intervals_s:
        if dt <= 0.0:
            raise PassExceeded("sampling interval must be positive")
        epochs = [scenario.window_start + timedelta(seconds=k * dt) for k in range(4)]
        _check_visibility(scenario, epochs, PassExceeded)
        records.append(_theory_record(scenario, epochs, "sampling_time_s",
                                      float(dt), error_level))
    return records


def sweep_window_offset(scenario: Scenario, intervals_s=DEFAULT_INTERVALS_S,
                        offsets_s=DEFAULT_OFFSETS_S,
                        error_level: str = ERROR_LEVEL_95) -> list[SweepRecord]:
    """Four equally spaced observations, window center offset from closest approach."""
    pad = timedelta(seconds=60.0)
    t_ca = closest_approach(scenario.source, scenario.user,
                            (scenario.window[0] - pad, scenario.window[1] + pad),
                            mask_angle_deg=0.0)
    records = []
    for dt in intervals_s:
        if dt <= 0.0:
            raise PassExceeded("sampling interval must be positive")
        for offset in offsets_s:
            center = t_ca + timedelta(seconds=offset)
            epochs = [center + timedelta(seconds=(k - 1.5) * dt) for k in range(4)]
            _check_visibility(scenario, epochs, PassExceeded)
            records.append(_theory_record(
                scenario, epochs, "window_offset_s", float(offset),
                error_level, series=f"interval_s={dt:g}"))
    return records


def sweep_inclination(scenario: Scenario,
                      max_elevations_deg=DEFAULT_MAX_ELEVATIONS_DEG,
                      altitude: float = 715e3,
                      pass_azimuth_deg: float = 0.0,
                      error_level: str = ERROR_LEVEL_95) -> list[SweepRecord]:
    """Synthetic passes of varied maximum elevation, four epochs at 60 s.

    The observation window follows the stable configuration found by the
    offset study: 60 s sampling centered on the closest approach.
    """
    t_ref = scenario.window_start + timedelta(seconds=scenario.window_duration_s / 2.0)
    records = []
    for target in max_elevations_deg:
        if target <= scenario.mask_angle_deg:
            raise TargetUnreachable(
                f"target {target} deg at or below mask {scenario.mask_angle_deg} deg")
        source = synthesize_pass(scenario.user, altitude, target, t_ref,
                                 pass_azimuth_deg=pass_azimuth_deg,
                                 mask_angle_deg=scenario.mask_angle_deg)
        sub = replace(scenario, source=source, satellite_name="")
        epochs = [t_ref + timedelta(seconds=s) for s in (-90.0, -30.0, 30.0, 90.0)]
        records.append(_theory_record(sub, epochs, "max_elevation_deg",
                                      float(target), error_level))
    return records


def ground_track(scenario: Scenario) -> list[GeodeticPosition]:
    """Sub-satellite geodetic points at the scenario epochs."""
    tsec = np.array([seconds_since_reference(scenario.source, t)
                     for t in scenario.epochs])
    pos, _ = positions_velocities(scenario.source, tsec)
    return [ecef_to_geodetic(p) for p in pos]


def ground_track_distance_m(node: GeodeticPosition,
                            track: list[GeodeticPosition]) -> float:
    """Great-circle distance (spherical) from a node to the ground track."""
    lat = math.radians(node.latitude)
    lon = math.radians(node.longitude)
    best = float("inf")
    for p in track:
        plat = math.radians(p.latitude)
        plon = math.radians(p.longitude)
        s = (math.sin(0.5 * (plat - lat)) ** 2
             + math.cos(lat) * math.cos(plat) * math.sin(0.5 * (plon - lon)) ** 2)
        best = min(best, 2.0 * math.asin(min(1.0, math.sqrt(s))))
    return best * R_E_SPHERICAL


def sweep_user_grid(scenario: Scenario, lat_range=(-3.0, 3.0),
                    lon_range=(-4.0, 4.0), step_deg: float = 0.5,
                    error_level: str = ERROR_LEVEL_95) -> list[GridRecord]:
    """DDOP errors for users on a lat/lon grid around the scenario user.

    The pass and epochs stay fixed; each node uses the subset of epochs it
    sees above the mask and needs at least the solver's state count of them.
    Ranges are offsets (deg) from the scenario user location.
    """
    scale = _level_scale(error_level)
    lats = np.arange(scenario.user.latitude + lat_range[0],
                     scenario.user.latitude + lat_range[1] + 1e-9, step_deg)
    lons = np.arange(scenario.user.longitude + lon_range[0],
                     scenario.user.longitude + lon_range[1] + 1e-9, step_deg)
    if len(lats) == 0 or len(lons) == 0:
        raise EmptyGrid("empty latitude or longitude range")

    epochs = scenario.epochs
    tsec = np.array([seconds_since_reference(scenario.source, t) for t in epochs])
    pos, _ = positions_velocities(scenario.source, tsec)

    min_epochs = max(4, scenario.solver.n_states)
    records = []
    any_visible = False
    for lat in lats:
        for lon in lons:
            node = GeodeticPosition(float(lat), float(lon), scenario.user.height)
            elev = elevations_deg(enu_frame(node), pos)
            keep = elev >= scenario.mask_angle_deg
            if keep.sum() < min_epochs:
                records.append(GridRecord(float(lat), float(lon),
                                          float("nan"), float("nan"),
                                          visible=False))
                continue
            any_visible = True
            sub = replace(scenario, user=node)
            node_epochs = [t for t, ok in zip(epochs, keep) if ok]
            try:
                theory = pass_theory(sub, epochs=node_epochs)
                along = theory.along_error * scale
                cross = theory.cross_error * scale
                clamped = cross > CLAMP_ERROR_M or along > CLAMP_ERROR_M
                records.append(GridRecord(
                    float(lat), float(lon),
                    min(along, CLAMP_ERROR_M), min(cross, CLAMP_ERROR_M),
                    visible=True, clamped=clamped))
            except SingularGeometry:
                records.append(GridRecord(float(lat), float(lon),
                                          CLAMP_ERROR_M, CLAMP_ERROR_M,
                                          visible=True, clamped=True))
    if not any_visible:
        raise EmptyGrid("no grid node sees the pass above the mask angle")
    return records


def write_sweep_csv(records: list[SweepRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter_name", "parameter_value", "series",
                         "along_error_m", "cross_error_m", "hddop",
                         "error_level", "flag"])
        for r in records:
            writer.writerow([r.parameter_name, f"{r.parameter_value:.10g}",
                             r.series, f"{r.along_error_m:.10g}",
                             f"{r.cross_error_m:.10g}", f"{r.hddop:.10g}",
                             r.error_level, r.flag])


def write_grid_csv(records: list[GridRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["latitude_deg", "longitude_deg", "along_error_m",
                         "cross_error_m", "visible", "clamped"])
        for r in records:
            along = "" if math.isnan(r.along_error_m) else f"{r.along_error_m:.10g}"
            cross = "" if math.isnan(r.cross_error_m) else f"{r.cross_error_m:.10g}"
            writer.writerow([f"{r.latitude:.10g}", f"{r.longitude:.10g}",
                             along, cross,
                             "true" if r.visible else "false",
                             "true" if r.clamped else "false"])
