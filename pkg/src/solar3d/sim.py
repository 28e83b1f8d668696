"""Daily energy simulation: shadowed direct power per sub-cell, one specular
bounce, trapezoidal integration over a sunrise-to-sunset time grid."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geom import Mesh, SubCells, dot_rows, tessellate_mesh
from .optics import OpticsConfig, direct_irradiance, reflectance_from_cos
from .shade import DEFAULT_EPS, OcclusionIndex, build_index, reflect_direction
from .solar import Site, SunState, sun_positions, sunrise_sunset, time_grid


@dataclass(frozen=True)
class SimConfig:
    site: Site = field(default_factory=Site)
    optics: OpticsConfig = field(default_factory=OpticsConfig)
    step_minutes: float = 6.0
    subcell_area: float = 0.25  # m^2, target upper bound per sub-cell
    shadow_eps: float = DEFAULT_EPS
    secondary_bounce: bool = True
    brute_force: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.step_minutes <= 0:
            raise ValueError("step_minutes must be positive")
        if self.subcell_area <= 0:
            raise ValueError("subcell_area must be positive")
        if self.shadow_eps <= 0:
            raise ValueError("shadow_eps must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True, eq=False)
class PowerBreakdown:
    total: float  # W
    per_triangle: np.ndarray  # W, primary + absorbed secondary
    primary: np.ndarray  # W, direct path only


@dataclass(frozen=True)
class Sample:
    time: dt.datetime
    zenith: float
    azimuth: float
    power: float


@dataclass(frozen=True, eq=False)
class SimResult:
    energy_wh: float
    peak_w: float
    samples: list[Sample]
    per_triangle_wh: np.ndarray

    def to_dict(self) -> dict:
        return {
            "energy_wh": self.energy_wh,
            "peak_w": self.peak_w,
            "samples": [
                {"time": s.time.isoformat(), "zenith_deg": s.zenith, "azimuth_deg": s.azimuth, "power_w": s.power}
                for s in self.samples
            ],
            "per_triangle_wh": [float(x) for x in self.per_triangle_wh],
        }


class Scene:
    """Mesh plus its tessellation and occlusion index, built once per run."""

    def __init__(self, mesh: Mesh, cfg: SimConfig):
        if len(mesh) == 0:
            raise ValueError("empty mesh")
        self.mesh = mesh
        self.cells: SubCells = tessellate_mesh(mesh, cfg.subcell_area)
        self.index: OcclusionIndex = build_index(mesh, brute_force=cfg.brute_force)


def instantaneous_power(mesh: Mesh, sun: SunState, cfg: SimConfig, scene: Scene | None = None) -> PowerBreakdown:
    scene = scene or Scene(mesh, cfg)
    n_tri = len(mesh)
    zero = np.zeros(n_tri)
    if not sun.zenith < 90.0:
        return PowerBreakdown(0.0, zero, zero.copy())

    opt = cfg.optics
    irr = float(direct_irradiance(sun.zenith, opt))
    s_hat = np.asarray(sun.s_hat, dtype=np.float64)
    cells = scene.cells

    cos_i = dot_rows(cells.normals, s_hat)
    front = np.flatnonzero((cos_i > 0.0) & (cells.areas > 0.0))
    lit = front[~scene.index.occluded(cells.centroids[front], s_hat, cells.parent[front], cfg.shadow_eps)]

    c = cos_i[lit]
    refl = reflectance_from_cos(c, opt)
    incident = irr * c * cells.areas[lit]
    p_primary = (1.0 - refl) * incident * opt.eta
    primary = np.bincount(cells.parent[lit], weights=p_primary, minlength=n_tri)
    per_tri = primary.copy()

    if cfg.secondary_bounce and lit.size:
        n = cells.normals[lit]
        d_out = reflect_direction(-s_hat, n)
        # renormalize against rounding so the kernel sees unit directions
        d_out = d_out / np.sqrt(dot_rows(d_out, d_out))[:, None]
        t_hit, k_hit = scene.index.nearest(cells.centroids[lit], d_out, cells.parent[lit], cfg.shadow_eps)
        got = k_hit >= 0
        cos2 = -dot_rows(d_out[got], scene.index.soup.normal[k_hit[got]])
        front2 = cos2 > 0.0  # back faces absorb nothing
        r_power = (refl * incident)[got][front2]
        c2 = cos2[front2]
        absorbed = (1.0 - reflectance_from_cos(c2, opt)) * r_power * opt.eta
        per_tri = per_tri + np.bincount(k_hit[got][front2], weights=absorbed, minlength=n_tri)

    return PowerBreakdown(float(np.sum(per_tri)), per_tri, primary)


def trapezoid_wh(times: Sequence[dt.datetime], powers: Sequence[float]) -> float:
    """Trapezoid rule over (time, W) samples, in watt-hours."""
    p = np.asarray(powers, dtype=np.float64)
    if p.size < 2:
        return 0.0
    hours = np.array([(b - a).total_seconds() / 3600.0 for a, b in zip(times[:-1], times[1:])])
    return float(np.sum(0.5 * (p[:-1] + p[1:]) * hours))


def _trapezoid_rows(times, rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] < 2:
        return np.zeros(rows.shape[1])
    hours = np.array([(b - a).total_seconds() / 3600.0 for a, b in zip(times[:-1], times[1:])])
    return np.sum(0.5 * (rows[:-1] + rows[1:]) * hours[:, None], axis=0)


def simulate_day(
    mesh: Mesh,
    cfg: SimConfig,
    times: Sequence[dt.datetime] | None = None,
    power_fn: Callable[[SunState], float] | None = None,
) -> SimResult:
    """Integrate the day's light curve.

    ``times`` overrides the sunrise-to-sunset grid and ``power_fn`` replaces
    the ray-traced power model; both exist for testing the integrator.
    """
    if times is None:
        t_rise, t_set = sunrise_sunset(cfg.site)
        times = time_grid(t_rise, t_set, cfg.step_minutes)
    times = list(times)
    suns = sun_positions(cfg.site, times)

    if power_fn is not None:
        totals = [float(power_fn(s)) for s in suns]
        per_tri_rows = np.array(totals)[:, None]
    else:
        scene = Scene(mesh, cfg)

        def one(sun):
            return instantaneous_power(mesh, sun, cfg, scene)

        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                parts = list(pool.map(one, suns))
        else:
            parts = [one(s) for s in suns]
        totals = [p.total for p in parts]
        per_tri_rows = np.array([p.per_triangle for p in parts]).reshape(len(parts), -1)

    samples = [Sample(s.time, s.zenith, s.azimuth, p) for s, p in zip(suns, totals)]
    return SimResult(
        energy_wh=trapezoid_wh(times, totals),
        peak_w=max(totals) if totals else 0.0,
        samples=samples,
        per_triangle_wh=_trapezoid_rows(times, per_tri_rows),
    )


LIGHTCURVE_HEADER = ("time_iso", "zenith_deg", "azimuth_deg", "power_w")


def export_lightcurve(result: SimResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LIGHTCURVE_HEADER)
    for s in result.samples:
        w.writerow([s.time.isoformat(), f"{s.zenith:.6f}", f"{s.azimuth:.6f}", f"{s.power:.6f}"])
    return buf.getvalue()


def read_lightcurve(text: str) -> list[tuple[dt.datetime, float, float, float]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != LIGHTCURVE_HEADER:
        raise ValueError("not a light-curve CSV")
    return [(dt.datetime.fromisoformat(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in rows[1:]]


def energy_ratio(a: SimResult, b: SimResult) -> float:
    return a.energy_wh / b.energy_wh if b.energy_wh else math.nan
