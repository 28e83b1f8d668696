from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solar3d.geom import (
    BoundingBox,
    EmptyGeometryError,
    GeometryError,
    GeometryFormatError,
    GeometryParseError,
    Mesh,
    check_bbox,
    export_obj,
    mesh_total_area,
    parse_geometry,
    serialize_geometry,
    subdivision_depth,
    tessellate,
    tessellate_mesh,
    triangle_area,
    triangle_normal,
)

coord = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)
triangles = st.lists(st.lists(coord, min_size=9, max_size=9), min_size=1, max_size=12)


def _nondegenerate_tri():
    return st.tuples(*[coord] * 9).map(lambda v: np.array(v, dtype=float).reshape(3, 3)).filter(
        lambda t: triangle_area(t) > 1e-2
    )


class TestParse:
    def test_round_trip_is_bit_exact(self):
        m = parse_geometry("0 0 0 1 0 0 0 1 0\n0.1 0.2 0.3 1e-3 2.5 7 3 3 3")
        assert parse_geometry(serialize_geometry(m)) == m

    @given(triangles)
    def test_round_trip_property(self, rows):
        m = Mesh.from_triangles(np.array(rows).reshape(-1, 3, 3))
        assert parse_geometry(serialize_geometry(m)) == m

    def test_any_whitespace_separates(self):
        a = parse_geometry("0 0 0 1 0 0 0 1 0")
        b = parse_geometry("0\t0\n0   1 0 0\r\n0 1 0\n\n")
        assert a == b

    def test_empty_text(self):
        with pytest.raises(EmptyGeometryError):
            parse_geometry("  \n ")

    def test_count_not_multiple_of_nine(self):
        with pytest.raises(GeometryFormatError):
            parse_geometry("0 0 0 1 0 0 0 1")

    def test_bad_token_reports_position(self):
        with pytest.raises(GeometryParseError) as info:
            parse_geometry("0 0 0 1 0 0 0 1 0 zz")
        assert info.value.token == "zz"
        assert info.value.position == 9

    @pytest.mark.parametrize("tok", ["nan", "inf", "-inf", "NaN"])
    def test_non_finite_rejected(self, tok):
        with pytest.raises(GeometryParseError):
            parse_geometry(f"0 0 0 1 0 0 0 1 {tok}")

    def test_mesh_rejects_non_finite_arrays(self):
        with pytest.raises(GeometryError):
            Mesh(np.array([[[0, 0, 0], [1, 0, 0], [0, np.nan, 0]]], dtype=float))

    def test_mesh_is_read_only(self):
        m = parse_geometry("0 0 0 1 0 0 0 1 0")
        with pytest.raises(ValueError):
            m.tris[0, 0, 0] = 5.0


def test_obj_export_has_one_based_faces():
    m = parse_geometry("0 0 0 1 0 0 0 1 0 0 0 1 1 0 1 0 1 1")
    lines = export_obj(m).splitlines()
    assert lines[:3] == ["v 0.0 0.0 0.0", "v 1.0 0.0 0.0", "v 0.0 1.0 0.0"]
    assert lines[-2:] == ["f 1 2 3", "f 4 5 6"]


def test_normal_follows_right_hand_rule():
    assert np.allclose(triangle_normal([[0, 0, 0], [1, 0, 0], [0, 1, 0]]), [0, 0, 1])
    assert np.allclose(triangle_normal([[0, 0, 0], [0, 1, 0], [1, 0, 0]]), [0, 0, -1])


def test_degenerate_normal_is_zero():
    assert np.array_equal(triangle_normal([[0, 0, 0], [1, 1, 1], [2, 2, 2]]), np.zeros(3))


def test_total_area():
    m = parse_geometry("0 0 0 2 0 0 0 2 0\n0 0 0 0 3 0 0 0 4")
    assert mesh_total_area(m) == pytest.approx(2.0 + 6.0)


class TestBBox:
    box = BoundingBox()

    def test_closed_interval(self):
        m = parse_geometry("0 0 0 20 0 0 20 20 10")
        assert check_bbox(m, self.box).ok

    @pytest.mark.parametrize("vertex,corner", [
        ("20.001 0 0", 0), ("0 -1e-9 0", 0), ("0 0 10.000001", 0),
    ])
    def test_any_escape_fails(self, vertex, corner):
        m = parse_geometry(f"0 0 0 1 0 0 0 1 0\n{vertex} 1 1 0 2 2 0")
        v = check_bbox(m, self.box)
        assert not v.ok
        assert v.triangle == 1
        assert v.corner == corner

    def test_box_must_be_positive(self):
        with pytest.raises(ValueError):
            BoundingBox(0.0, 1.0, 1.0)


class TestTessellation:
    def test_depth(self):
        assert subdivision_depth(100.0, 0.25) == 5  # 100 / 4**5 < 0.25 <= 100 / 4**4
        assert subdivision_depth(0.1, 0.25) == 0

    def test_matches_recursive_midpoint_subdivision(self):
        tri = np.array([[0.0, 0.0, 0.0], [4.0, 0.0, 0.0], [1.0, 3.0, 0.5]])

        def recurse(t, k):
            if k == 0:
                return [t.mean(axis=0)]
            a, b, c = t
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            out = []
            for sub in ([a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]):
                out += recurse(np.array(sub), k - 1)
            return out

        k = 3
        ref = np.array(recurse(tri, k))
        cells = tessellate(tri, triangle_area(tri) / 4**k)
        got = cells.centroids
        assert len(got) == 4**k
        key = lambda p: np.lexsort(np.round(p, 9).T)  # noqa: E731
        assert np.allclose(got[key(got)], ref[key(ref)], atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(_nondegenerate_tri(), st.floats(min_value=0.05, max_value=50.0))
    def test_cells_partition_the_area(self, tri, target):
        cells = tessellate(tri, target)
        assert math.isclose(cells.areas.sum(), triangle_area(tri), rel_tol=1e-12)
        assert cells.areas.max() <= target * (1 + 1e-12)

    def test_mesh_cells_record_parent(self):
        m = parse_geometry("0 0 0 2 0 0 0 2 0\n0 0 0 0 2 0 0 0 2")
        cells = tessellate_mesh(m, 0.1)
        assert set(np.unique(cells.parent)) == {0, 1}
        for k in (0, 1):
            assert np.allclose(cells.normals[cells.parent == k], triangle_normal(m.tris[k]))
