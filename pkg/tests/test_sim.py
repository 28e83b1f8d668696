from __future__ import annotations

import dataclasses
import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solar3d.baselines import gen_flat, gen_open_cube, oriented_quad
from solar3d.geom import Mesh
from solar3d.optics import OpticsConfig
from solar3d.sim import (
    SimConfig,
    energy_ratio,
    export_lightcurve,
    instantaneous_power,
    read_lightcurve,
    simulate_day,
    trapezoid_wh,
)
from solar3d.solar import Site, SunState, sun_vector

UP, SOUTH = (0, 0, 1), (0, -1, 0)


def sun_at(zenith: float, azimuth: float) -> SunState:
    return SunState(dt.datetime(2011, 6, 21, 12), zenith, azimuth, np.asarray(sun_vector(zenith, azimuth)))


def unpolarised_r(c: float, n: float = 2.2) -> float:
    st_ = math.sqrt(1 - c * c) / n
    ct = math.sqrt(1 - st_ * st_)
    return (((c - n * ct) / (c + n * ct)) ** 2 + ((ct - n * c) / (ct + n * c)) ** 2) / 2


def irradiance(zenith: float) -> float:
    return 1488 * 0.7 ** ((1 / math.cos(math.radians(zenith))) ** 0.678)


class TestInstantaneous:
    def test_unit_panel_under_overhead_sun(self):
        m = gen_flat(1.0)
        p = instantaneous_power(m, sun_at(0.0, 180.0), SimConfig())
        assert p.total == pytest.approx(1041.6 * (1 - 0.140625) * 0.12, rel=1e-12)
        assert p.total == pytest.approx(107.415, abs=1e-3)

    def test_sun_below_horizon(self):
        p = instantaneous_power(gen_flat(1.0), sun_at(95.0, 270.0), SimConfig())
        assert p.total == 0.0 and not p.per_triangle.any()

    def test_back_face_collects_nothing(self):
        down = Mesh.from_triangles(oriented_quad((0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1), (0, 0, -1)))
        assert instantaneous_power(down, sun_at(20.0, 180.0), SimConfig()).total == 0.0

    @pytest.mark.parametrize("zenith", [30.0, 60.0, 70.0])
    def test_floor_and_wall_with_one_bounce(self, zenith):
        """Closed form for a floor and a south-facing wall behind it, sun due south.

        The floor's mirror image of the sun lands wholly on the wall (wall
        height 2 >= tan(elev)), and the wall's reflection reaches the floor
        from the band z < tan(elev) of it.
        """
        elev = math.radians(90 - zenith)
        h = 2.0
        floor = oriented_quad((0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), UP)
        wall = oriented_quad((0, 1, 0), (1, 1, 0), (1, 1, h), (0, 1, h), SOUTH)
        m = Mesh.from_triangles(floor + wall)
        cfg = SimConfig(subcell_area=1e-3)
        p = instantaneous_power(m, sun_at(zenith, 180.0), cfg)

        i, eta = irradiance(zenith), 0.12
        se, ce = math.sin(elev), math.cos(elev)
        band = min(h, math.tan(elev))
        floor_p = (1 - unpolarised_r(se)) * i * se * eta + (1 - unpolarised_r(se)) * unpolarised_r(ce) * i * ce * band * eta
        wall_p = (1 - unpolarised_r(ce)) * i * ce * h * eta + (1 - unpolarised_r(ce)) * unpolarised_r(se) * i * se * eta
        # the band edge falls inside sub-cells unless tan(elev) is dyadic, hence rel 1e-2
        assert p.per_triangle[:2].sum() == pytest.approx(floor_p, rel=1e-2)
        assert p.per_triangle[2:].sum() == pytest.approx(wall_p, rel=1e-9)

    def test_bounce_closed_form_is_exact_on_aligned_grid(self):
        # elevation 45 deg puts the band edge on a sub-cell boundary
        floor = oriented_quad((0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), UP)
        wall = oriented_quad((0, 1, 0), (1, 1, 0), (1, 1, 2), (0, 1, 2), SOUTH)
        p = instantaneous_power(Mesh.from_triangles(floor + wall), sun_at(45.0, 180.0), SimConfig(subcell_area=0.01))
        i, c = irradiance(45.0), math.sqrt(0.5)
        r, t = unpolarised_r(c), 1 - unpolarised_r(c)
        assert p.per_triangle[:2].sum() == pytest.approx(t * i * c * 0.12 * (1 + r), rel=1e-12)
        assert p.per_triangle[2:].sum() == pytest.approx(t * i * c * 0.12 * (2 + r), rel=1e-12)

    def test_bounce_only_adds(self):
        m = gen_open_cube(10.0)
        sun = sun_at(40.0, 120.0)
        with_b = instantaneous_power(m, sun, SimConfig(subcell_area=1.0))
        without = instantaneous_power(m, sun, SimConfig(subcell_area=1.0, secondary_bounce=False))
        assert np.all(with_b.per_triangle >= without.per_triangle)
        assert np.array_equal(with_b.primary, without.primary)

    def test_wall_shades_floor(self):
        # a tall north-facing wall on the south edge shadows the floor behind it
        floor = oriented_quad((0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), UP)
        wall = oriented_quad((0, 0, 0), (1, 0, 0), (1, 0, 5), (0, 0, 5), (0, 1, 0))
        p = instantaneous_power(Mesh.from_triangles(floor + wall), sun_at(30.0, 180.0), SimConfig(subcell_area=0.01))
        assert p.primary[:2].sum() == 0.0


class TestIntegration:
    def test_constant_power(self):
        t0 = dt.datetime(2011, 6, 21, 8)
        times = [t0 + dt.timedelta(minutes=6 * k) for k in range(101)]
        assert trapezoid_wh(times, [100.0] * 101) == pytest.approx(1000.0, rel=1e-12)

    def test_linear_ramp_is_exact(self):
        t0 = dt.datetime(2011, 6, 21, 8)
        times = [t0 + dt.timedelta(minutes=7 * k) for k in range(31)]
        hours = np.array([(t - t0).total_seconds() / 3600 for t in times])
        assert trapezoid_wh(times, 50 * hours) == pytest.approx(25 * hours[-1] ** 2, rel=1e-12)

    def test_power_fn_hook(self):
        site = Site()
        times = [site.local(9), site.local(10), site.local(12)]
        res = simulate_day(gen_flat(1.0), SimConfig(), times=times, power_fn=lambda sun: 60.0)
        assert res.energy_wh == pytest.approx(180.0)
        assert res.peak_w == 60.0

    def test_endpoints_carry_zero_power(self, coarse_cfg):
        res = simulate_day(gen_flat(10.0), coarse_cfg)
        assert res.samples[0].power == 0.0 and res.samples[-1].power == 0.0

    def test_per_triangle_energy_sums_to_total(self, coarse_cfg):
        res = simulate_day(gen_open_cube(10.0), coarse_cfg)
        assert res.per_triangle_wh.sum() == pytest.approx(res.energy_wh, rel=1e-12)


class TestPhysicsProperties:
    def test_flat_energy_scales_with_area(self, coarse_cfg):
        a = simulate_day(gen_flat(5.0), coarse_cfg).energy_wh
        b = simulate_day(gen_flat(10.0), coarse_cfg).energy_wh
        assert b == pytest.approx(4 * a, rel=1e-12)

    def test_energy_linear_in_efficiency(self, coarse_cfg):
        cfg2 = dataclasses.replace(coarse_cfg, optics=OpticsConfig(eta=0.24))
        m = gen_open_cube(10.0)
        assert simulate_day(m, cfg2).energy_wh == pytest.approx(2 * simulate_day(m, coarse_cfg).energy_wh, rel=1e-12)

    @settings(max_examples=8, deadline=None)
    @given(st.floats(0.0, 10.0), st.floats(0.0, 10.0))
    def test_isolated_panel_translation_invariant(self, x0, y0):
        cfg = SimConfig(step_minutes=60.0, subcell_area=4.0)
        ref = simulate_day(gen_flat(4.0), cfg).energy_wh
        assert simulate_day(gen_flat(4.0, x0, y0), cfg).energy_wh == pytest.approx(ref, rel=1e-9)

    def test_refining_subcells_converges(self):
        cfg = SimConfig(step_minutes=30.0)
        m = gen_open_cube(10.0)
        coarse = simulate_day(m, dataclasses.replace(cfg, subcell_area=4.0)).energy_wh
        mid = simulate_day(m, dataclasses.replace(cfg, subcell_area=1.0)).energy_wh
        fine = simulate_day(m, dataclasses.replace(cfg, subcell_area=0.25)).energy_wh
        assert abs(fine - mid) < abs(mid - coarse) + 1e-9 * fine
        assert fine == pytest.approx(mid, rel=0.02)

    def test_time_step_convergence(self):
        m = gen_flat(20.0)
        a = simulate_day(m, SimConfig(step_minutes=6.0, subcell_area=100.0)).energy_wh
        b = simulate_day(m, SimConfig(step_minutes=0.5, subcell_area=100.0)).energy_wh
        assert a == pytest.approx(b, rel=5e-3)

    def test_brute_force_gives_identical_result(self, coarse_cfg):
        m = gen_open_cube(10.0)
        a = simulate_day(m, coarse_cfg)
        b = simulate_day(m, dataclasses.replace(coarse_cfg, brute_force=True))
        assert a.energy_wh == b.energy_wh
        assert np.array_equal(a.per_triangle_wh, b.per_triangle_wh)

    def test_threads_do_not_change_bits(self, coarse_cfg):
        m = gen_open_cube(10.0)
        a = simulate_day(m, coarse_cfg)
        b = simulate_day(m, dataclasses.replace(coarse_cfg, threads=4))
        assert a.to_dict() == b.to_dict()

    def test_ratio_helper(self, coarse_cfg):
        a = simulate_day(gen_flat(10.0), coarse_cfg)
        assert energy_ratio(a, a) == 1.0


def test_lightcurve_round_trip(coarse_cfg):
    res = simulate_day(gen_flat(10.0), coarse_cfg)
    text = export_lightcurve(res)
    assert text.splitlines()[0] == "time_iso,zenith_deg,azimuth_deg,power_w"
    rows = read_lightcurve(text)
    assert len(rows) == len(res.samples)
    assert rows[0][0] == res.samples[0].time
    assert [r[3] for r in rows] == pytest.approx([s.power for s in res.samples], abs=1e-6)


def test_lightcurve_rejects_foreign_csv():
    with pytest.raises(ValueError):
        read_lightcurve("a,b\n1,2\n")


@pytest.mark.parametrize("kw", [{"step_minutes": 0}, {"subcell_area": -1}, {"shadow_eps": 0}, {"threads": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)
