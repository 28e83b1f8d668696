"""Sun position via the NREL Solar Position Algorithm, sunrise/sunset, time grid.

World frame: x = East, y = North, z = Up.  Azimuth is measured in degrees
clockwise from North, so the unit vector toward the sun is
``(sin(zen) sin(az), sin(zen) cos(az), cos(zen))``.

The SPA routines are vectorized over the Julian day so the same code serves
single timestamps and whole-day scans.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from . import _spa_tables as tables

_L = [np.array(t) for t in tables.L_TERMS]
_B = [np.array(t) for t in tables.B_TERMS]
_R = [np.array(t) for t in tables.R_TERMS]
_NUT_ABCD = np.array(tables.NUTATION_ABCD)
_NUT_Y = np.array(tables.NUTATION_Y, dtype=np.float64)

_UNIX_EPOCH_JD = 2440587.5
_J2000 = 2451545.0


class NoSunriseError(ValueError):
    """Raised when the sun does not cross the horizon on the requested date."""


@dataclass(frozen=True)
class Site:
    latitude: float = 42.36
    longitude: float = -71.09  # degrees East; Boston is west of Greenwich
    date: dt.date = dt.date(2011, 6, 21)
    tz_hours: float = -4.0  # EDT
    elevation: float = 0.0  # m
    pressure: float = 1013.25  # mbar
    temperature: float = 12.0  # deg C
    delta_t: float = 67.0  # TT - UT, seconds
    refraction: bool = True
    atmos_refract: float = 0.5667  # deg, apparent refraction at the horizon

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} out of range")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} out of range")
        if isinstance(self.date, str):
            object.__setattr__(self, "date", dt.date.fromisoformat(self.date))

    @property
    def tzinfo(self) -> dt.timezone:
        return dt.timezone(dt.timedelta(hours=self.tz_hours))

    def local(self, hour: int = 0, minute: int = 0, second: int = 0) -> dt.datetime:
        return dt.datetime(
            self.date.year, self.date.month, self.date.day, hour, minute, second, tzinfo=self.tzinfo
        )

    def midnight(self) -> dt.datetime:
        return self.local()


@dataclass(frozen=True, eq=False)
class SunState:
    time: dt.datetime
    zenith: float
    azimuth: float
    s_hat: np.ndarray = field(repr=False)

    @property
    def elevation(self) -> float:
        return 90.0 - self.zenith


def sun_vector(zenith_deg, azimuth_deg) -> np.ndarray:
    z = np.radians(zenith_deg)
    a = np.radians(azimuth_deg)
    return np.stack([np.sin(z) * np.sin(a), np.sin(z) * np.cos(a), np.cos(z)], axis=-1)


# --- SPA ---------------------------------------------------------------------


def julian_day(t: dt.datetime) -> float:
    if t.tzinfo is None:
        raise ValueError("timestamps must be timezone-aware")
    return t.timestamp() / 86400.0 + _UNIX_EPOCH_JD


def _series(terms: list[np.ndarray], jme) -> np.ndarray:
    jme = np.asarray(jme, dtype=np.float64)
    total = np.zeros_like(jme)
    for power, rows in enumerate(terms):
        a, b, c = rows[:, 0], rows[:, 1], rows[:, 2]
        s = np.sum(a[:, None] * np.cos(b[:, None] + c[:, None] * jme.reshape(1, -1)), axis=0)
        total = total + s.reshape(jme.shape) * jme**power
    return total / 1e8


def _poly(coeffs, x):
    return sum(c * x**i for i, c in enumerate(coeffs))


def spa(jd, latitude, longitude, elevation=0.0, pressure=1013.25, temperature=12.0,
        delta_t=67.0, atmos_refract=0.5667, refraction=True) -> dict:
    """Run the SPA for Julian day(s) ``jd`` (UT).  Returns intermediates by name.

    Angles are degrees.  ``zenith`` is the topocentric zenith including the
    atmospheric refraction correction when ``refraction`` is true.
    """
    jd = np.asarray(jd, dtype=np.float64)
    jde = jd + delta_t / 86400.0
    jc = (jd - _J2000) / 36525.0
    jce = (jde - _J2000) / 36525.0
    jme = jce / 10.0

    L = np.degrees(_series(_L, jme)) % 360.0
    B = np.degrees(_series(_B, jme))
    R = _series(_R, jme)

    theta = (L + 180.0) % 360.0
    beta = -B

    x = np.stack([
        _poly((297.85036, 445267.111480, -0.0019142, 1.0 / 189474.0), jce),
        _poly((357.52772, 35999.050340, -0.0001603, -1.0 / 300000.0), jce),
        _poly((134.96298, 477198.867398, 0.0086972, 1.0 / 56250.0), jce),
        _poly((93.27191, 483202.017538, -0.0036825, 1.0 / 327270.0), jce),
        _poly((125.04452, -1934.136261, 0.0020708, 1.0 / 450000.0), jce),
    ])
    arg = np.radians(np.tensordot(_NUT_Y, x, axes=(1, 0)))
    a, b, c, d = (_NUT_ABCD[:, i].reshape((-1,) + (1,) * jce.ndim) for i in range(4))
    delta_psi = np.sum((a + b * jce) * np.sin(arg), axis=0) / 36e6
    delta_eps = np.sum((c + d * jce) * np.cos(arg), axis=0) / 36e6

    u = jme / 10.0
    eps0 = _poly((84381.448, -4680.93, -1.55, 1999.25, -51.38, -249.67, -39.05, 7.12,
                  27.87, 5.79, 2.45), u)
    eps = eps0 / 3600.0 + delta_eps

    delta_tau = -20.4898 / (3600.0 * R)
    lam = theta + delta_psi + delta_tau

    nu0 = (280.46061837 + 360.98564736629 * (jd - _J2000)
           + 0.000387933 * jc**2 - jc**3 / 38710000.0) % 360.0
    nu = nu0 + delta_psi * np.cos(np.radians(eps))

    lam_r, eps_r, beta_r = np.radians(lam), np.radians(eps), np.radians(beta)
    alpha = np.degrees(np.arctan2(
        np.sin(lam_r) * np.cos(eps_r) - np.tan(beta_r) * np.sin(eps_r), np.cos(lam_r))) % 360.0
    delta = np.degrees(np.arcsin(
        np.sin(beta_r) * np.cos(eps_r) + np.cos(beta_r) * np.sin(eps_r) * np.sin(lam_r)))

    H = (nu + longitude - alpha) % 360.0

    xi = np.radians(8.794 / (3600.0 * R))
    phi = np.radians(latitude)
    uu = np.arctan(0.99664719 * np.tan(phi))
    xx = np.cos(uu) + elevation / 6378140.0 * np.cos(phi)
    yy = 0.99664719 * np.sin(uu) + elevation / 6378140.0 * np.sin(phi)

    H_r, delta_r = np.radians(H), np.radians(delta)
    d_alpha = np.arctan2(-xx * np.sin(xi) * np.sin(H_r), np.cos(delta_r) - xx * np.sin(xi) * np.cos(H_r))
    delta_p = np.arctan2((np.sin(delta_r) - yy * np.sin(xi)) * np.cos(d_alpha),
                         np.cos(delta_r) - xx * np.sin(xi) * np.cos(H_r))
    H_p = H_r - d_alpha

    e0 = np.degrees(np.arcsin(np.sin(phi) * np.sin(delta_p) + np.cos(phi) * np.cos(delta_p) * np.cos(H_p)))
    if refraction:
        de = (pressure / 1010.0) * (283.0 / (273.0 + temperature)) * 1.02 / (
            60.0 * np.tan(np.radians(e0 + 10.3 / (e0 + 5.11))))
        de = np.where(e0 >= -(0.26667 + atmos_refract), de, 0.0)
    else:
        de = np.zeros_like(e0)
    e = e0 + de
    zenith = 90.0 - e

    gamma = np.degrees(np.arctan2(np.sin(H_p), np.cos(H_p) * np.sin(phi) - np.tan(delta_p) * np.cos(phi)))
    azimuth = (gamma + 180.0) % 360.0

    return {
        "jd": jd, "jde": jde, "L": L, "B": B, "R": R, "theta": theta, "beta": beta,
        "delta_psi": delta_psi, "delta_eps": delta_eps, "epsilon": eps, "delta_tau": delta_tau,
        "lambda": lam, "nu": nu, "alpha": alpha, "delta": delta, "H": H,
        "alpha_prime": alpha + np.degrees(d_alpha), "delta_prime": np.degrees(delta_p),
        "H_prime": np.degrees(H_p), "e0": e0, "delta_e": de, "zenith": zenith, "azimuth": azimuth,
    }


def _site_spa(site: Site, jd):
    return spa(jd, site.latitude, site.longitude, site.elevation, site.pressure,
               site.temperature, site.delta_t, site.atmos_refract, site.refraction)


def sun_position(site: Site, t: dt.datetime) -> SunState:
    """Sun zenith/azimuth at ``t`` (naive timestamps are taken as site-local)."""
    if t.tzinfo is None:
        t = t.replace(tzinfo=site.tzinfo)
    out = _site_spa(site, julian_day(t))
    zen = float(out["zenith"])
    az = float(out["azimuth"])
    return SunState(t, zen, az, sun_vector(zen, az))


def sun_positions(site: Site, times) -> list[SunState]:
    """Vectorized :func:`sun_position` over a sequence of timestamps."""
    times = [t if t.tzinfo is not None else t.replace(tzinfo=site.tzinfo) for t in times]
    if not times:
        return []
    out = _site_spa(site, np.array([julian_day(t) for t in times]))
    zen = np.asarray(out["zenith"], dtype=np.float64)
    az = np.asarray(out["azimuth"], dtype=np.float64)
    return [SunState(t, float(z), float(a), sun_vector(float(z), float(a))) for t, z, a in zip(times, zen, az)]


def zenith_series(site: Site, times) -> np.ndarray:
    jd = np.array([julian_day(t) for t in times])
    return _site_spa(site, jd)["zenith"]


# --- sunrise / sunset ----------------------------------------------------------


def _zenith_at_us(site: Site, base_jd: float, us) -> np.ndarray:
    return _site_spa(site, base_jd + np.asarray(us, dtype=np.float64) / 86400e6)["zenith"]


def _bisect_crossing(site: Site, base_jd: float, lo: int, hi: int, rising: bool, tol_us: int) -> tuple[int, int]:
    # Invariant: zenith(lo) >= 90 for rising (sun still down), < 90 for setting.
    while hi - lo > tol_us:
        mid = (lo + hi) // 2
        down = float(_zenith_at_us(site, base_jd, mid)) >= 90.0
        if down == rising:
            lo = mid
        else:
            hi = mid
    return lo, hi


def sunrise_sunset(site: Site, scan_minutes: float = 5.0, tol_seconds: float = 0.5) -> tuple[dt.datetime, dt.datetime]:
    """Local sunrise and sunset where the (refracted) zenith crosses 90 degrees.

    Bisection in whole microseconds down to ``tol_seconds``.  The returned
    rise is the last bracketed instant with the sun still at/below the
    horizon, the set the first such instant, so both endpoints carry zero
    direct power.
    """
    midnight = site.midnight()
    base_jd = julian_day(midnight)
    step = int(round(scan_minutes * 60e6))
    us = np.arange(0, 86400_000_000 + 1, step, dtype=np.int64)
    down = _zenith_at_us(site, base_jd, us) >= 90.0
    rises = np.flatnonzero(down[:-1] & ~down[1:])
    sets = np.flatnonzero(~down[:-1] & down[1:])
    if len(rises) == 0 or len(sets) == 0:
        state = "polar night" if down.all() else "midnight sun" if (~down).all() else "no full day"
        raise NoSunriseError(f"sun does not rise and set at lat {site.latitude} on {site.date} ({state})")
    tol = int(tol_seconds * 1e6)
    r_lo, _ = _bisect_crossing(site, base_jd, int(us[rises[0]]), int(us[rises[0] + 1]), True, tol)
    _, s_hi = _bisect_crossing(site, base_jd, int(us[sets[-1]]), int(us[sets[-1] + 1]), False, tol)
    t_rise = midnight + dt.timedelta(microseconds=r_lo)
    t_set = midnight + dt.timedelta(microseconds=s_hi)
    if not t_rise < t_set:
        raise NoSunriseError("sunset does not follow sunrise on this date")
    return t_rise, t_set


def solar_noon(site: Site) -> dt.datetime:
    """Instant of minimum zenith, to ~1 s (golden-section on a 1 min bracket)."""
    midnight = site.midnight()
    base_jd = julian_day(midnight)
    us = np.arange(0, 86400_000_000, 60_000_000, dtype=np.int64)
    k = int(np.argmin(_zenith_at_us(site, base_jd, us)))
    lo, hi = float(us[max(k - 1, 0)]), float(us[min(k + 1, len(us) - 1)])
    g = (np.sqrt(5.0) - 1.0) / 2.0
    while hi - lo > 1e5:
        a = hi - g * (hi - lo)
        b = lo + g * (hi - lo)
        if float(_zenith_at_us(site, base_jd, a)) < float(_zenith_at_us(site, base_jd, b)):
            hi = b
        else:
            lo = a
    return midnight + dt.timedelta(microseconds=int(round((lo + hi) / 2)))


def time_grid(t_rise: dt.datetime, t_set: dt.datetime, step_minutes: float) -> list[dt.datetime]:
    """Uniform steps from rise, with the set time appended as the exact last node."""
    if step_minutes <= 0:
        raise ValueError("step must be positive")
    if not t_rise < t_set:
        raise ValueError("t_rise must precede t_set")
    step = dt.timedelta(minutes=step_minutes)
    if step <= dt.timedelta(0):
        raise ValueError("step below timestamp resolution")
    out = []
    t = t_rise
    while t < t_set:
        out.append(t)
        t = t + step
    out.append(t_set)
    return out
