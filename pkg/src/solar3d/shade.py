"""Ray/triangle occlusion: Moller-Trumbore kernel, brute-force and BVH indices.

Both indices evaluate the *same* elementwise kernel on the same operands, the
BVH only skips (ray, triangle) pairs whose padded boxes cannot meet.  Their
answers are therefore bit-identical, which the test-suite checks.

Hit convention: a ray with origin ``o`` registers triangle ``k`` at distance
``t`` when ``t >= -eps`` and ``k`` is not the ray's ``skip`` index.  Origins
are sub-cell centroids lying on their parent panel; the parent is skipped, so
no forward offset is needed and nothing in front of the panel, however thin
the gap, can be stepped over.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import Mesh, cross_rows, dot_rows

BARY_TOL = 1e-9  # barycentric slack: shared edges never leak between neighbours
PARALLEL_TOL = 1e-12  # |cos| between ray and plane below which a ray is "in-plane"
DEFAULT_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        n = float(np.sqrt(dot_rows(d, d)))
        if abs(n - 1.0) > 1e-12:
            raise ValueError("ray direction must be unit length")
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))
        object.__setattr__(self, "direction", d)


class _Soup:
    """Per-triangle operands shared by every query path."""

    def __init__(self, tris: np.ndarray):
        tris = np.ascontiguousarray(tris, dtype=np.float64)
        self.n = tris.shape[0]
        self.v0 = tris[:, 0, :].copy()
        self.e1 = tris[:, 1, :] - tris[:, 0, :]
        self.e2 = tris[:, 2, :] - tris[:, 0, :]
        c = cross_rows(self.e1, self.e2)
        self.cn = np.sqrt(dot_rows(c, c))
        self.normal = np.zeros_like(c)
        ok = self.cn > 0
        self.normal[ok] = c[ok] / self.cn[ok, None]
        self.lo = tris.min(axis=1)
        self.hi = tris.max(axis=1)
        self.scale = float(np.abs(tris).max()) + 1.0 if self.n else 1.0


def _kernel(o, d, v0, e1, e2, cn, eps):
    """Hit distance (inf on miss) for broadcast-compatible ray/triangle operands."""
    p = cross_rows(d, e2)
    det = dot_rows(e1, p)
    ok = np.abs(det) > PARALLEL_TOL * cn
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        s = o - v0
        u = dot_rows(s, p) * inv
        q = cross_rows(s, e1)
        v = dot_rows(d, q) * inv
        t = dot_rows(e2, q) * inv
    hit = ok & (u >= -BARY_TOL) & (v >= -BARY_TOL) & (u + v <= 1.0 + BARY_TOL) & (t >= -eps)
    return np.where(hit, t, np.inf)


def ray_triangle_intersect(ray: Ray, tri, eps: float = 0.0) -> float | None:
    """Distance to the triangle along the ray, or None on a miss (or t < -eps)."""
    soup = _Soup(np.asarray(tri, dtype=np.float64).reshape(1, 3, 3))
    t = float(_kernel(ray.origin, ray.direction, soup.v0[0], soup.e1[0], soup.e2[0], soup.cn[0], eps))
    return None if np.isinf(t) else t


def reflect_direction(incident, normal) -> np.ndarray:
    """Specular reflection d - 2 (d.n) n, row-wise for arrays."""
    d = np.asarray(incident, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    return d - 2.0 * dot_rows(d, n)[..., None] * n


def _prep(origins, dirs, skip):
    o = np.ascontiguousarray(np.atleast_2d(np.asarray(origins, dtype=np.float64)))
    d = np.asarray(dirs, dtype=np.float64)
    d = np.ascontiguousarray(np.broadcast_to(d, o.shape))
    if skip is None:
        skip = np.full(o.shape[0], -1, dtype=np.int64)
    else:
        skip = np.ascontiguousarray(np.broadcast_to(np.asarray(skip, dtype=np.int64), (o.shape[0],)))
    return o, d, skip


class OcclusionIndex:
    """Common query surface; subclasses decide which pairs get evaluated."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.soup = _Soup(mesh.tris)

    def occluded(self, origins, dirs, skip=None, eps: float = DEFAULT_EPS) -> np.ndarray:
        raise NotImplementedError

    def nearest(self, origins, dirs, skip=None, eps: float = DEFAULT_EPS) -> tuple[np.ndarray, np.ndarray]:
        """(distance, triangle index) of the closest hit; (inf, -1) on a miss.

        Ties on distance go to the lowest triangle index.
        """
        raise NotImplementedError

    def _pair_t(self, o, d, skip, tri_ids, eps):
        s = self.soup
        t = _kernel(o[:, None, :], d[:, None, :], s.v0[tri_ids][None], s.e1[tri_ids][None],
                    s.e2[tri_ids][None], s.cn[tri_ids][None], eps)
        t[skip[:, None] == tri_ids[None, :]] = np.inf
        return t


class BruteForceIndex(OcclusionIndex):
    """Tests every ray against every triangle; the oracle for :class:`BVHIndex`."""

    chunk_pairs = 1 << 18

    def _chunks(self, m):
        step = max(1, self.chunk_pairs // max(self.soup.n, 1))
        for a in range(0, m, step):
            yield slice(a, min(a + step, m))

    def occluded(self, origins, dirs, skip=None, eps=DEFAULT_EPS):
        o, d, skip = _prep(origins, dirs, skip)
        out = np.zeros(o.shape[0], dtype=bool)
        if self.soup.n == 0:
            return out
        all_ids = np.arange(self.soup.n)
        for sl in self._chunks(o.shape[0]):
            t = self._pair_t(o[sl], d[sl], skip[sl], all_ids, eps)
            out[sl] = np.isfinite(t).any(axis=1)
        return out

    def nearest(self, origins, dirs, skip=None, eps=DEFAULT_EPS):
        o, d, skip = _prep(origins, dirs, skip)
        best_t = np.full(o.shape[0], np.inf)
        best_i = np.full(o.shape[0], -1, dtype=np.int64)
        if self.soup.n == 0:
            return best_t, best_i
        all_ids = np.arange(self.soup.n)
        for sl in self._chunks(o.shape[0]):
            t = self._pair_t(o[sl], d[sl], skip[sl], all_ids, eps)
            k = np.argmin(t, axis=1)
            tk = t[np.arange(t.shape[0]), k]
            best_t[sl] = tk
            best_i[sl] = np.where(np.isfinite(tk), k, -1)
        return best_t, best_i


@dataclass
class _Node:
    lo: np.ndarray
    hi: np.ndarray
    left: int = -1
    right: int = -1
    tris: np.ndarray | None = None  # sorted triangle ids on leaves


class BVHIndex(OcclusionIndex):
    """Median-split bounding volume hierarchy traversed with ray packets."""

    def __init__(self, mesh: Mesh, leaf_size: int = 4):
        super().__init__(mesh)
        self.leaf_size = leaf_size
        self.nodes: list[_Node] = []
        if self.soup.n:
            cent = (self.soup.lo + self.soup.hi) * 0.5
            self._build(np.arange(self.soup.n), cent)

    def _build(self, ids: np.ndarray, cent: np.ndarray) -> int:
        node = _Node(self.soup.lo[ids].min(axis=0), self.soup.hi[ids].max(axis=0))
        self.nodes.append(node)
        me = len(self.nodes) - 1
        if len(ids) <= self.leaf_size:
            node.tris = np.sort(ids)
            return me
        c = cent[ids]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        order = ids[np.argsort(c[:, axis], kind="stable")]
        half = len(order) // 2
        node.left = self._build(order[:half], cent)
        node.right = self._build(order[half:], cent)
        return me

    def _slab(self, node: _Node, o, d, pad):
        lo = node.lo - pad
        hi = node.hi + pad
        t0 = np.full(o.shape[0], -np.inf)
        t1 = np.full(o.shape[0], np.inf)
        for ax in range(3):
            da = d[:, ax]
            oa = o[:, ax]
            par = da == 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                ta = (lo[ax] - oa) / da
                tb = (hi[ax] - oa) / da
            near = np.where(par, np.where((oa >= lo[ax]) & (oa <= hi[ax]), -np.inf, np.inf), np.minimum(ta, tb))
            far = np.where(par, np.where((oa >= lo[ax]) & (oa <= hi[ax]), np.inf, -np.inf), np.maximum(ta, tb))
            t0 = np.maximum(t0, near)
            t1 = np.minimum(t1, far)
        return (t0 <= t1) & (t1 >= 0.0), t0

    def _pad(self, eps):
        return eps + 1e-6 + 1e-8 * self.soup.scale

    def occluded(self, origins, dirs, skip=None, eps=DEFAULT_EPS):
        o, d, skip = _prep(origins, dirs, skip)
        out = np.zeros(o.shape[0], dtype=bool)
        if not self.nodes:
            return out
        pad = self._pad(eps)
        stack = [(0, np.arange(o.shape[0]))]
        while stack:
            k, ids = stack.pop()
            ids = ids[~out[ids]]
            if ids.size == 0:
                continue
            node = self.nodes[k]
            hit, _ = self._slab(node, o[ids], d[ids], pad)
            ids = ids[hit]
            if ids.size == 0:
                continue
            if node.tris is not None:
                t = self._pair_t(o[ids], d[ids], skip[ids], node.tris, eps)
                out[ids[np.isfinite(t).any(axis=1)]] = True
            else:
                stack.append((node.right, ids))
                stack.append((node.left, ids))
        return out

    def nearest(self, origins, dirs, skip=None, eps=DEFAULT_EPS):
        o, d, skip = _prep(origins, dirs, skip)
        best_t = np.full(o.shape[0], np.inf)
        best_i = np.full(o.shape[0], -1, dtype=np.int64)
        if not self.nodes:
            return best_t, best_i
        pad = self._pad(eps)
        stack = [(0, np.arange(o.shape[0]))]
        while stack:
            k, ids = stack.pop()
            node = self.nodes[k]
            hit, t_near = self._slab(node, o[ids], d[ids], pad)
            # boxes are padded, so every hit inside lies at t >= t_near
            ids = ids[hit & (t_near <= best_t[ids])]
            if ids.size == 0:
                continue
            if node.tris is not None:
                t = self._pair_t(o[ids], d[ids], skip[ids], node.tris, eps)
                j = np.argmin(t, axis=1)
                tj = t[np.arange(t.shape[0]), j]
                cand = node.tris[j]
                better = (tj < best_t[ids]) | ((tj == best_t[ids]) & np.isfinite(tj) & (cand < best_i[ids]))
                best_t[ids[better]] = tj[better]
                best_i[ids[better]] = cand[better]
            else:
                stack.append((node.right, ids))
                stack.append((node.left, ids))
        return best_t, best_i


def build_index(mesh: Mesh, brute_force: bool = False) -> OcclusionIndex:
    if len(mesh) == 0:
        raise ValueError("cannot index an empty mesh")
    return BruteForceIndex(mesh) if brute_force else BVHIndex(mesh)


def is_shadowed(p, s_hat, mesh_or_index, skip: int = -1, eps: float = DEFAULT_EPS) -> bool:
    """True iff the ray from ``p`` toward ``s_hat`` meets any triangle but ``skip``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    index = mesh_or_index if isinstance(mesh_or_index, OcclusionIndex) else build_index(mesh_or_index)
    return bool(index.occluded(np.asarray(p, dtype=np.float64)[None], s_hat, np.array([skip]), eps)[0])
