"""Parametric generators for the named reference geometries.

The evolved candidates' vertex lists were never published, so each family
encodes the described topology with tunable parameters.  Footprints start at
the origin corner; ``x0``/``y0`` shift them.  Vertical walls face outward by
default: a single-sided wall facing into a box only sees light that already
came through the top opening, so inward walls cannot add collecting aperture.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable

import numpy as np

from .geom import BoundingBox, Mesh, mesh_total_area

EAST = (1.0, 0.0, 0.0)
WEST = (-1.0, 0.0, 0.0)
NORTH = (0.0, 1.0, 0.0)
SOUTH = (0.0, -1.0, 0.0)
UP = (0.0, 0.0, 1.0)


class BaselineError(ValueError):
    pass


def oriented_quad(a, b, c, d, facing) -> list[np.ndarray]:
    """Two triangles (a, b, c) and (a, c, d), wound so the normal agrees with ``facing``."""
    a, b, c, d = (np.asarray(p, dtype=np.float64) for p in (a, b, c, d))
    n = np.cross(b - a, c - a)
    if float(np.dot(n, facing)) < 0:
        return [np.array([a, c, b]), np.array([a, d, c])]
    return [np.array([a, b, c]), np.array([a, c, d])]


def oriented_tri(a, b, c, facing) -> np.ndarray:
    a, b, c = (np.asarray(p, dtype=np.float64) for p in (a, b, c))
    if float(np.dot(np.cross(b - a, c - a), facing)) < 0:
        return np.array([a, c, b])
    return np.array([a, b, c])


def _floor(x0, y0, s):
    return oriented_quad((x0, y0, 0), (x0 + s, y0, 0), (x0 + s, y0 + s, 0), (x0, y0 + s, 0), UP)


def _x_wall(x, y0, y1, z0, z1, facing):
    return oriented_quad((x, y0, z0), (x, y1, z0), (x, y1, z1), (x, y0, z1), facing)


def _y_wall(y, x0, x1, z0, z1, facing):
    return oriented_quad((x0, y, z0), (x1, y, z0), (x1, y, z1), (x0, y, z1), facing)


def _check_box(mesh: Mesh, box: BoundingBox | None, name: str) -> Mesh:
    if box is not None:
        v = mesh.vertices
        if v.min() < 0 or v[:, 0].max() > box.x_max or v[:, 1].max() > box.y_max or v[:, 2].max() > box.z_max:
            raise BaselineError(f"{name} does not fit the {box.as_list()} box")
    return mesh


# --- families ----------------------------------------------------------------


@dataclass(frozen=True)
class FlatParams:
    s: float = 10.0
    x0: float = 0.0
    y0: float = 0.0


def gen_flat(s: float = 10.0, x0: float = 0.0, y0: float = 0.0) -> Mesh:
    if s <= 0:
        raise BaselineError("s must be positive")
    return Mesh.from_triangles(_floor(x0, y0, s))


@dataclass(frozen=True)
class OpenCubeParams:
    s: float = 10.0
    h: float = 10.0
    walls_out: bool = True
    x0: float = 0.0
    y0: float = 0.0


def gen_open_cube(s: float = 10.0, h: float | None = None, walls_out: bool = True, x0: float = 0.0,
                  y0: float = 0.0, box: BoundingBox | None = BoundingBox()) -> Mesh:
    """Floor plus four vertical walls: 10 triangles, area s^2 + 4 s h."""
    h = s if h is None else h
    if s <= 0 or h <= 0:
        raise BaselineError("s and h must be positive")
    sgn = 1.0 if walls_out else -1.0
    x1, y1 = x0 + s, y0 + s
    tris = _floor(x0, y0, s)
    tris += _y_wall(y0, x0, x1, 0, h, tuple(sgn * c for c in SOUTH))
    tris += _x_wall(x1, y0, y1, 0, h, tuple(sgn * c for c in EAST))
    tris += _y_wall(y1, x0, x1, 0, h, tuple(sgn * c for c in NORTH))
    tris += _x_wall(x0, y0, y1, 0, h, tuple(sgn * c for c in WEST))
    return _check_box(Mesh.from_triangles(tris), box, "open cube")


@dataclass(frozen=True)
class HighTableParams:
    s: float = 10.0
    h: float = 10.0
    x0: float = 0.0
    y0: float = 0.0


def gen_high_table(p: HighTableParams = HighTableParams(), box: BoundingBox | None = BoundingBox()) -> Mesh:
    """East and West walls joined by a flat roof; North and South left open."""
    s, h, x0, y0 = p.s, p.h, p.x0, p.y0
    if s <= 0 or h <= 0:
        raise BaselineError("s and h must be positive")
    x1, y1 = x0 + s, y0 + s
    tris = _x_wall(x0, y0, y1, 0, h, WEST) + _x_wall(x1, y0, y1, 0, h, EAST)
    tris += oriented_quad((x0, y0, h), (x1, y0, h), (x1, y1, h), (x0, y1, h), UP)
    return _check_box(Mesh.from_triangles(tris), box, "high table")


@dataclass(frozen=True)
class SawtoothParams:
    s: float = 10.0
    h: float = 6.0  # eave height of the E/W walls
    teeth: int = 2
    tooth_height: float = 2.5
    south_fraction: float = 0.7  # share of each period taken by the south-facing facet
    x0: float = 0.0
    y0: float = 0.0


def gen_tilted_sawtooth(p: SawtoothParams = SawtoothParams(), box: BoundingBox | None = BoundingBox()) -> Mesh:
    """Corrugated roof (ridges run East-West) on East/West walls.

    Each period has a long facet rising northward, so facing South, and a short
    North-facing return; two periods give the M profile.
    """
    if p.s <= 0 or p.h <= 0 or p.tooth_height <= 0 or p.teeth < 1 or not 0 < p.south_fraction < 1:
        raise BaselineError("invalid sawtooth parameters")
    x0, y0, s, h = p.x0, p.y0, p.s, p.h
    x1 = x0 + s
    period = s / p.teeth
    prof = []  # (y, z) along the profile, south to north
    for k in range(p.teeth):
        ya = y0 + k * period
        prof.append((ya, h))
        prof.append((ya + p.south_fraction * period, h + p.tooth_height))
    prof.append((y0 + s, h))

    tris = _x_wall(x0, y0, y0 + s, 0, h, WEST) + _x_wall(x1, y0, y0 + s, 0, h, EAST)
    for (ya, za), (yb, zb) in zip(prof[:-1], prof[1:]):
        tris += oriented_quad((x0, ya, za), (x1, ya, za), (x1, yb, zb), (x0, yb, zb), UP)
    for k in range(p.teeth):
        (ya, _), (yr, zr), (yb, _) = prof[2 * k], prof[2 * k + 1], prof[2 * k + 2]
        tris.append(oriented_tri((x0, ya, h), (x0, yr, zr), (x0, yb, h), WEST))
        tris.append(oriented_tri((x1, ya, h), (x1, yr, zr), (x1, yb, h), EAST))
    return _check_box(Mesh.from_triangles(tris), box, "sawtooth")


@dataclass(frozen=True)
class CavityFinParams:
    s: float = 10.0
    h: float = 10.0
    fin_height: float = 10.0
    fin_length: float = 10.0  # fin runs from the North wall southward
    walls_out: bool = True
    x0: float = 0.0
    y0: float = 0.0


def gen_cavity_fin(p: CavityFinParams = CavityFinParams(), box: BoundingBox | None = BoundingBox()) -> Mesh:
    """Floor, East/West walls and a South-facing North wall (open to the South),
    split down the middle by a North-South fin.

    The fin is one rectangle cut along its diagonal; its two halves face East
    and West, so morning and afternoon light are both collected without
    stacking two panels back to back.
    """
    s, h, x0, y0 = p.s, p.h, p.x0, p.y0
    if s <= 0 or h <= 0 or p.fin_height <= 0 or not 0 < p.fin_length <= s:
        raise BaselineError("invalid cavity-fin parameters")
    x1, y1 = x0 + s, y0 + s
    sgn = 1.0 if p.walls_out else -1.0
    tris = _floor(x0, y0, s)
    tris += _x_wall(x0, y0, y1, 0, h, tuple(sgn * c for c in WEST))
    tris += _x_wall(x1, y0, y1, 0, h, tuple(sgn * c for c in EAST))
    tris += _y_wall(y1, x0, x1, 0, h, SOUTH)
    xm = x0 + 0.5 * s
    ys = y1 - p.fin_length
    hf = p.fin_height
    tris.append(oriented_tri((xm, ys, 0), (xm, y1, 0), (xm, y1, hf), EAST))
    tris.append(oriented_tri((xm, ys, 0), (xm, y1, hf), (xm, ys, hf), WEST))
    return _check_box(Mesh.from_triangles(tris), box, "cavity fin")


@dataclass(frozen=True)
class WaffleParams:
    s: float = 10.0
    h: float = 7.5
    n_walls: int = 11
    n_partitions: int = 13
    tilt_deg: float = 19.0
    floor: bool = True
    x0: float = 0.0
    y0: float = 0.0


def gen_tilted_waffle(p: WaffleParams = WaffleParams(), box: BoundingBox | None = BoundingBox()) -> Mesh:
    """Grid of vertical North-South walls crossed by East-West partitions whose
    tops lean South by ``tilt_deg`` from vertical.

    A partition leaning South by the noon zenith angle is edge-on to the noon
    sun.  Partitions face South (their normal points South and slightly down);
    outer walls face outward and inner walls alternate East/West.
    """
    if p.s <= 0 or p.h <= 0 or p.n_walls < 2 or p.n_partitions < 1 or not 0 <= p.tilt_deg < 90:
        raise BaselineError("invalid waffle parameters")
    s, h, x0, y0 = p.s, p.h, p.x0, p.y0
    x1, y1 = x0 + s, y0 + s
    lean = h * math.tan(math.radians(p.tilt_deg))
    if lean >= s:
        raise BaselineError("partitions lean out of the footprint")
    tris = _floor(x0, y0, s) if p.floor else []
    for i in range(p.n_walls):
        x = x0 + s * i / (p.n_walls - 1)
        if i == 0:
            facing = WEST
        elif i == p.n_walls - 1:
            facing = EAST
        else:
            facing = EAST if i % 2 else WEST
        tris += _x_wall(x, y0, y1, 0, h, facing)
    t = math.radians(p.tilt_deg)
    partition_normal = (0.0, -math.cos(t), -math.sin(t))
    for j in range(p.n_partitions):
        frac = (j + 1) / p.n_partitions
        yb = y0 + lean + (s - lean) * frac  # foot; the top sits `lean` further South
        tris += oriented_quad((x0, yb, 0), (x1, yb, 0), (x1, yb - lean, h), (x0, yb - lean, h), partition_normal)
    return _check_box(Mesh.from_triangles(tris), box, "tilted waffle")


# --- registry -----------------------------------------------------------------


@dataclass(frozen=True)
class Family:
    name: str
    params: type
    build: Callable[..., Mesh]
    # parameter name -> (low, high) search range as a fraction-free absolute range
    ranges: dict

    def make(self, params=None, box: BoundingBox | None = BoundingBox(), **overrides) -> Mesh:
        p = params if params is not None else self.params()
        if overrides:
            p = replace(p, **overrides)
        return self.build(p, box)

    def param_dict(self, params) -> dict:
        return asdict(params)


def _flat(p: FlatParams, box):
    return _check_box(gen_flat(p.s, p.x0, p.y0), box, "flat")


def _cube(p: OpenCubeParams, box):
    return gen_open_cube(p.s, p.h, p.walls_out, p.x0, p.y0, box)


FAMILIES: dict[str, Family] = {
    "flat": Family("flat", FlatParams, _flat, {"s": (1.0, 20.0)}),
    "open-cube": Family("open-cube", OpenCubeParams, _cube, {"s": (1.0, 20.0), "h": (0.5, 10.0)}),
    "high-table": Family("high-table", HighTableParams, gen_high_table, {"s": (1.0, 20.0), "h": (0.5, 10.0)}),
    "sawtooth": Family("sawtooth", SawtoothParams, gen_tilted_sawtooth, {
        "s": (1.0, 20.0), "h": (0.5, 8.0), "teeth": (1, 6), "tooth_height": (0.2, 2.0),
        "south_fraction": (0.3, 0.9)}),
    "cavity-fin": Family("cavity-fin", CavityFinParams, gen_cavity_fin, {
        "s": (1.0, 20.0), "h": (0.5, 10.0), "fin_height": (0.5, 10.0), "fin_length": (0.5, 20.0)}),
    "tilted-waffle": Family("tilted-waffle", WaffleParams, gen_tilted_waffle, {
        "s": (1.0, 20.0), "h": (0.5, 10.0), "n_walls": (2, 11), "n_partitions": (1, 13),
        "tilt_deg": (0.0, 40.0)}),
}


def family_param_types(name: str) -> dict[str, type]:
    """Python type of each parameter, read off the defaults (annotations are strings here)."""
    defaults = FAMILIES[name].params()
    return {f.name: type(getattr(defaults, f.name)) for f in fields(defaults)}


def make_baseline(name: str, box: BoundingBox | None = BoundingBox(), **params) -> Mesh:
    try:
        fam = FAMILIES[name]
    except KeyError:
        raise BaselineError(f"unknown baseline {name!r}; choose from {', '.join(FAMILIES)}") from None
    return fam.make(box=box, **params)


def area_of(name: str, **params) -> float:
    return mesh_total_area(make_baseline(name, box=None, **params))
