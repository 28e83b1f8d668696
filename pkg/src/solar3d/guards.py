"""Validity gate in front of the simulator.

Rules run in a fixed order (cheap first): bbox, connectivity, degeneracy,
overlap, area.  Any failure zeroes the score unless a soft penalty factor is
configured.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geom import (
    BoundingBox,
    GeometryError,
    Mesh,
    check_bbox,
    dot_rows,
    mesh_total_area,
    parse_geometry,
    triangle_areas,
    triangle_normals,
)

RULES = ("parse", "bbox", "connectivity", "degeneracy", "overlap", "area")


@dataclass(frozen=True)
class GuardConfig:
    area_cap: float  # m^2; deliberately no default, experiments use 3x/5x/20x footprints
    ground_eps: float = 0.01
    hash_quantum: float = 0.001
    min_feature: float = 0.001  # minimum triangle altitude, m
    min_area: float = 1e-6
    min_clearance: float = 0.001
    parallel_tol_deg: float = 0.5
    box: BoundingBox = field(default_factory=BoundingBox)
    soft_penalty_factor: float | None = None

    def __post_init__(self):
        for name in ("area_cap", "ground_eps", "hash_quantum", "min_feature", "min_area",
                     "min_clearance", "parallel_tol_deg"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if isinstance(self.box, (list, tuple)):
            object.__setattr__(self, "box", BoundingBox(*self.box))


@dataclass(frozen=True)
class Violation:
    rule: str
    triangles: tuple[int, ...]
    detail: str

    def to_dict(self) -> dict:
        return {"rule": self.rule, "triangles": list(self.triangles), "detail": self.detail}


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violations: tuple[Violation, ...] = ()


@dataclass
class GuardReport:
    bbox_ok: bool = False
    connectivity_ok: bool = False
    area_ok: bool = False
    degeneracy_ok: bool = False
    overlap_ok: bool = False
    violations: list[Violation] = field(default_factory=list)
    final_score: float = 0.0
    total_area: float | None = None
    n_triangles: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first_failure(self) -> str | None:
        for rule in RULES:
            if any(v.rule == rule for v in self.violations):
                return rule
        return None

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "first_failure": self.first_failure,
            "bbox_ok": self.bbox_ok,
            "connectivity_ok": self.connectivity_ok,
            "degeneracy_ok": self.degeneracy_ok,
            "overlap_ok": self.overlap_ok,
            "area_ok": self.area_ok,
            "n_triangles": self.n_triangles,
            "total_area_m2": self.total_area,
            "final_score": self.final_score,
            "violations": [v.to_dict() for v in self.violations],
        }


def _quantize(v: np.ndarray, q: float) -> np.ndarray:
    return np.rint(v / q).astype(np.int64)


def connectivity_check(mesh: Mesh, cfg: GuardConfig) -> Verdict:
    """BFS over shared (quantized) vertices, seeded from ground-anchored triangles."""
    n = len(mesh)
    keys = _quantize(mesh.tris, cfg.hash_quantum)
    owners: dict[tuple, list[int]] = {}
    for k in range(n):
        for c in range(3):
            owners.setdefault(tuple(keys[k, c]), []).append(k)
    seeds = np.flatnonzero((mesh.tris[:, :, 2] <= cfg.ground_eps).any(axis=1))
    seen = np.zeros(n, dtype=bool)
    seen[seeds] = True
    queue = deque(int(s) for s in seeds)
    while queue:
        k = queue.popleft()
        for c in range(3):
            for j in owners[tuple(keys[k, c])]:
                if not seen[j]:
                    seen[j] = True
                    queue.append(j)
    if seen.all():
        return Verdict(True)
    orphans = tuple(int(i) for i in np.flatnonzero(~seen))
    return Verdict(False, (Violation(
        "connectivity", orphans,
        f"{int(seen.sum())} of {n} triangles reachable from the ground; {len(orphans)} levitating"),))


def degeneracy_check(mesh: Mesh, cfg: GuardConfig) -> Verdict:
    """Reject slivers: minimum altitude below min_feature or area below min_area."""
    tris = mesh.tris
    areas = triangle_areas(tris)
    edges = np.stack([tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 1], tris[:, 0] - tris[:, 2]], axis=1)
    longest = np.sqrt(dot_rows(edges, edges)).max(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        altitude = np.where(longest > 0, 2.0 * areas / longest, 0.0)
    bad = (altitude < cfg.min_feature) | (areas < cfg.min_area)
    if not bad.any():
        return Verdict(True)
    out = []
    for k in np.flatnonzero(bad):
        out.append(Violation("degeneracy", (int(k),),
                             f"triangle {k}: min altitude {altitude[k]:.3g} m, area {areas[k]:.3g} m^2"))
    return Verdict(False, tuple(out))


def _plane_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(n, a)
    u /= np.linalg.norm(u)
    return u, np.cross(n, u)


def _clip(subject: list, a: np.ndarray, b: np.ndarray) -> list:
    """Keep the part of a polygon left of the directed edge a->b."""
    def side(p):
        return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])

    out = []
    for i, cur in enumerate(subject):
        prev = subject[i - 1]
        sc, sp = side(cur), side(prev)
        if sc >= 0:
            if sp < 0:
                out.append(prev + (cur - prev) * (sp / (sp - sc)))
            out.append(cur)
        elif sp >= 0:
            out.append(prev + (cur - prev) * (sp / (sp - sc)))
    return out


def _poly_area(poly: list) -> float:
    if len(poly) < 3:
        return 0.0
    p = np.array(poly)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def overlap_area_2d(t1: np.ndarray, t2: np.ndarray) -> float:
    """Intersection area of two 2D triangles (Sutherland-Hodgman)."""
    def ccw(t):
        return t if _poly_area(list(t)) >= 0 else t[::-1]

    t1, t2 = ccw(np.asarray(t1, float)), ccw(np.asarray(t2, float))
    poly = list(t1)
    for i in range(3):
        if not poly:
            return 0.0
        poly = _clip(poly, t2[i], t2[(i + 1) % 3])
    return abs(_poly_area(poly))


def overlap_check(mesh: Mesh, cfg: GuardConfig) -> Verdict:
    """Flag near-parallel panels closer than min_clearance whose footprints overlap."""
    tris = mesh.tris
    normals = triangle_normals(tris)
    areas = triangle_areas(tris)
    valid = areas > 0
    cos_tol = math.cos(math.radians(cfg.parallel_tol_deg))
    par = np.abs(normals @ normals.T) >= cos_tol
    par &= valid[:, None] & valid[None, :]
    ii, jj = np.nonzero(np.triu(par, k=1))
    out = []
    for i, j in zip(ii.tolist(), jj.tolist()):
        ni, nj = normals[i], normals[j]
        sep = max(
            float(np.max(np.abs(dot_rows(tris[j] - tris[i, 0], ni)))),
            float(np.max(np.abs(dot_rows(tris[i] - tris[j, 0], nj)))),
        )
        if sep >= cfg.min_clearance:
            continue
        u, v = _plane_basis(ni)
        a2 = np.stack([tris[i] @ u, tris[i] @ v], axis=1)
        b2 = np.stack([tris[j] @ u, tris[j] @ v], axis=1)
        ov = overlap_area_2d(a2, b2)
        if ov > 1e-9 * min(areas[i], areas[j]) + 1e-12:
            out.append(Violation("overlap", (i, j),
                                 f"triangles {i},{j}: gap {sep:.3g} m, projected overlap {ov:.3g} m^2"))
    return Verdict(not out, tuple(out))


def area_check(mesh: Mesh, cfg: GuardConfig) -> Verdict:
    a = mesh_total_area(mesh)
    if a <= cfg.area_cap:
        return Verdict(True)
    return Verdict(False, (Violation("area", (), f"total area {a:.6g} m^2 exceeds cap {cfg.area_cap:.6g} m^2"),))


def bbox_verdict(mesh: Mesh, cfg: GuardConfig) -> Verdict:
    b = check_bbox(mesh, cfg.box)
    if b.ok:
        return Verdict(True)
    return Verdict(False, (Violation(
        "bbox", (b.triangle,), f"triangle {b.triangle} vertex {b.corner} at {list(b.vertex)} outside box {cfg.box.as_list()}"),))


def evaluate_guards(mesh: Mesh, cfg: GuardConfig) -> GuardReport:
    """Run every rule and collect all violations in rule order."""
    rep = GuardReport(n_triangles=len(mesh))
    rep.total_area = mesh_total_area(mesh)
    checks = (
        ("bbox_ok", bbox_verdict),
        ("connectivity_ok", connectivity_check),
        ("degeneracy_ok", degeneracy_check),
        ("overlap_ok", overlap_check),
        ("area_ok", area_check),
    )
    for attr, fn in checks:
        v = fn(mesh, cfg)
        setattr(rep, attr, v.ok)
        rep.violations.extend(v.violations)
    return rep


def validate_text(mesh_text: str, cfg: GuardConfig) -> tuple[Mesh | None, GuardReport]:
    try:
        mesh = parse_geometry(mesh_text)
    except GeometryError as e:
        rep = GuardReport()
        rep.violations.append(Violation("parse", (), str(e)))
        return None, rep
    return mesh, evaluate_guards(mesh, cfg)


def score(mesh_text: str, sim_cfg, guard_cfg: GuardConfig, simulate=None) -> tuple[float, GuardReport]:
    """Daily energy (Wh) of a valid geometry, else 0.0; never raises on bad input."""
    from .sim import simulate_day

    simulate = simulate or simulate_day
    mesh, rep = validate_text(mesh_text, guard_cfg)
    if mesh is None:
        return 0.0, rep
    if rep.ok:
        rep.final_score = float(simulate(mesh, sim_cfg).energy_wh)
    elif guard_cfg.soft_penalty_factor is not None and rep.first_failure != "bbox":
        rep.final_score = float(simulate(mesh, sim_cfg).energy_wh) * guard_cfg.soft_penalty_factor
    return rep.final_score, rep
