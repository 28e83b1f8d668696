from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solar3d.baselines import FAMILIES, gen_flat, gen_open_cube, oriented_quad
from solar3d.geom import BoundingBox, Mesh, serialize_geometry
from solar3d.guards import (
    GuardConfig,
    area_check,
    connectivity_check,
    degeneracy_check,
    evaluate_guards,
    overlap_area_2d,
    overlap_check,
    score,
    validate_text,
)

DATA = Path(__file__).parent / "data"
CFG = GuardConfig(area_cap=2000.0)

EXPLOITS = {
    "levitating.txt": "connectivity",
    "out_of_box.txt": "bbox",
    "sliver.txt": "degeneracy",
    "coincident_stack.txt": "overlap",
}


class CountingSim:
    def __init__(self):
        self.calls = 0

    def __call__(self, mesh, cfg):
        self.calls += 1

        class R:
            energy_wh = 123.0

        return R()


@pytest.mark.parametrize("name,rule", sorted(EXPLOITS.items()))
def test_exploit_fixtures_score_zero(name, rule, coarse_cfg):
    sim = CountingSim()
    s, rep = score((DATA / name).read_text(), coarse_cfg, CFG, simulate=sim)
    assert s == 0.0
    assert rep.first_failure == rule
    assert {v.rule for v in rep.violations} == {rule}
    assert sim.calls == 0  # invalid geometry is never simulated


def test_valid_geometry_is_simulated(coarse_cfg):
    sim = CountingSim()
    s, rep = score(serialize_geometry(gen_open_cube(10.0)), coarse_cfg, CFG, simulate=sim)
    assert rep.ok and s == 123.0 and sim.calls == 1


@pytest.mark.parametrize("text", ["", "1 2 3", "0 0 0 1 0 0 0 1 nan", "hello"])
def test_unparseable_text_scores_zero(text, coarse_cfg):
    s, rep = score(text, coarse_cfg, CFG)
    assert s == 0.0 and rep.first_failure == "parse"


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_every_baseline_passes(name):
    rep = evaluate_guards(FAMILIES[name].make(), CFG)
    assert rep.ok, rep.to_dict()


class TestConnectivity:
    def test_touching_at_a_vertex_is_enough(self):
        floor = oriented_quad((0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 1))
        hang = [np.array([[1, 1, 0], [2, 1, 3], [1, 2, 3]], dtype=float)]
        assert connectivity_check(Mesh.from_triangles(floor + hang), CFG).ok

    def test_vertex_match_uses_millimetre_quantum(self):
        post = [np.array([[0, 0, 0], [1, 0, 0], [1, 1, 2]], dtype=float)]
        near = [np.array([[1.0002, 1, 2], [2, 1, 3], [1, 2, 3]])]
        far = [np.array([[1.002, 1, 2], [2, 1, 3], [1, 2, 3]])]
        assert connectivity_check(Mesh.from_triangles(post + near), CFG).ok
        v = connectivity_check(Mesh.from_triangles(post + far), CFG)
        assert not v.ok and v.violations[0].triangles == (1,)

    def test_ground_tolerance(self):
        low = Mesh.from_triangles([[[0, 0, 0.01], [1, 0, 0.01], [0, 1, 2]]])
        high = Mesh.from_triangles([[[0, 0, 0.011], [1, 0, 0.011], [0, 1, 2]]])
        assert connectivity_check(low, CFG).ok
        assert not connectivity_check(high, CFG).ok

    def test_edge_crossing_without_shared_vertex_is_not_connected(self):
        # T-junction: the upper triangle rests on the floor's edge midpoint only
        floor = oriented_quad((0, 0, 0), (2, 0, 0), (2, 2, 0), (0, 2, 0), (0, 0, 1))
        t = [np.array([[1, 0, 0.5], [1.5, 0, 2], [0.5, 0, 2]])]
        assert not connectivity_check(Mesh.from_triangles(floor + t), CFG).ok


class TestDegeneracy:
    def test_collinear(self):
        v = degeneracy_check(Mesh.from_triangles([[[0, 0, 0], [1, 0, 0], [2, 0, 0]]]), CFG)
        assert not v.ok

    def test_needle_caught_by_altitude(self):
        # large area is irrelevant when the triangle is thinner than 1 mm
        needle = Mesh.from_triangles([[[0, 0, 0], [5000, 0, 0], [2500, 0.0009, 0]]])
        assert not degeneracy_check(needle, CFG).ok

    def test_small_but_fat_triangle_passes(self):
        assert degeneracy_check(Mesh.from_triangles([[[0, 0, 0], [0.01, 0, 0], [0, 0.01, 0]]]), CFG).ok


class TestOverlap:
    def test_overlap_area_of_identical_triangles(self):
        t = np.array([[0, 0], [2, 0], [0, 2]], dtype=float)
        assert overlap_area_2d(t, t) == pytest.approx(2.0)

    def test_disjoint_and_touching(self):
        a = np.array([[0, 0], [1, 0], [0, 1]], dtype=float)
        assert overlap_area_2d(a, a + 5) == 0.0
        assert overlap_area_2d(a, np.array([[1, 0], [2, 0], [1, 1]], dtype=float)) == pytest.approx(0.0, abs=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=12, max_size=12))
    def test_overlap_symmetric_and_bounded(self, xs):
        a = np.array(xs[:6]).reshape(3, 2)
        b = np.array(xs[6:]).reshape(3, 2)

        def area(t):
            return 0.5 * abs((t[1, 0] - t[0, 0]) * (t[2, 1] - t[0, 1]) - (t[2, 0] - t[0, 0]) * (t[1, 1] - t[0, 1]))

        ab, ba = overlap_area_2d(a, b), overlap_area_2d(b, a)
        assert ab == pytest.approx(ba, abs=1e-9)
        assert ab <= min(area(a), area(b)) + 1e-9

    def test_clearance_threshold(self):
        flat = gen_flat(4.0)
        ok = Mesh.concat(flat, Mesh(flat.tris + [0, 0, 0.0011]))
        bad = Mesh.concat(flat, Mesh(flat.tris + [0, 0, 0.0009]))
        assert overlap_check(ok, CFG).ok
        assert not overlap_check(bad, CFG).ok

    def test_coplanar_neighbours_are_fine(self):
        assert overlap_check(gen_flat(10.0), CFG).ok
        assert overlap_check(Mesh.concat(gen_flat(2.0), gen_flat(2.0, x0=2.0)), CFG).ok


def test_area_cap_is_inclusive():
    m = gen_flat(10.0)
    assert area_check(m, GuardConfig(area_cap=100.0)).ok
    assert not area_check(m, GuardConfig(area_cap=99.999)).ok


def test_all_rules_reported_first_failure_named(coarse_cfg):
    flat = gen_flat(30.0)  # escapes the box and exceeds a small cap
    _, rep = validate_text(serialize_geometry(flat), GuardConfig(area_cap=50.0))
    assert rep.first_failure == "bbox"
    assert {v.rule for v in rep.violations} == {"bbox", "area"}
    assert not rep.bbox_ok and not rep.area_ok and rep.connectivity_ok


def test_soft_penalty_is_opt_in(coarse_cfg):
    text = (DATA / "levitating.txt").read_text()
    hard, _ = score(text, coarse_cfg, CFG, simulate=CountingSim())
    soft, _ = score(text, coarse_cfg, GuardConfig(area_cap=2000.0, soft_penalty_factor=0.5), simulate=CountingSim())
    assert hard == 0.0 and soft == pytest.approx(61.5)


def test_report_json_shape():
    _, rep = validate_text((DATA / "sliver.txt").read_text(), CFG)
    d = rep.to_dict()
    assert d["ok"] is False and d["first_failure"] == "degeneracy"
    assert d["violations"][0]["triangles"] == [2]


def test_custom_box():
    m = gen_flat(10.0)
    assert not evaluate_guards(m, GuardConfig(area_cap=500.0, box=BoundingBox(5, 5, 5))).ok


@pytest.mark.parametrize("kw", [{"area_cap": 0}, {"area_cap": 10, "min_clearance": -1}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        GuardConfig(**kw)
