"""Air-mass irradiance, Snell refraction and Fresnel reflectance of a flat cover.

Functions accept scalars or numpy arrays of angles in degrees.  The
``*_from_cos`` variants take the cosine of the incidence angle directly and
are what the simulator uses on whole sub-cell arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class HorizonError(ValueError):
    """Sun at or below the horizon; air mass undefined."""


class TotalInternalReflection(ValueError):
    pass


@dataclass(frozen=True)
class OpticsConfig:
    n1: float = 1.0  # air
    n2: float = 2.2  # cover
    eta: float = 0.12  # cell efficiency
    s0: float = 1488.0  # W/m^2
    k_atm: float = 0.7
    am_exp: float = 0.678
    # "literal": AM = (1/cos z)**am_exp, I = s0 * k**AM.
    # "outer":   AM = 1/cos z, I = s0 * (k**AM)**am_exp (sensitivity variant).
    am_form: str = "literal"

    def __post_init__(self):
        if not self.n2 > self.n1 > 0:
            raise ValueError("need n2 > n1 > 0")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if not self.s0 > 0:
            raise ValueError("s0 must be positive")
        if not 0 < self.k_atm < 1:
            raise ValueError("k_atm must lie in (0, 1)")
        if self.am_form not in ("literal", "outer"):
            raise ValueError(f"unknown am_form {self.am_form!r}")


DEFAULT_OPTICS = OpticsConfig()


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def air_mass(theta_z, cfg: OpticsConfig = DEFAULT_OPTICS):
    theta_z = np.asarray(theta_z, dtype=np.float64)
    if np.any(theta_z >= 90.0) or np.any(theta_z < 0.0):
        raise HorizonError("air mass needs 0 <= zenith < 90 degrees")
    sec = 1.0 / np.cos(np.radians(theta_z))
    am = sec**cfg.am_exp if cfg.am_form == "literal" else sec
    return _scalar_or_array(am)


def direct_irradiance(theta_z, cfg: OpticsConfig = DEFAULT_OPTICS):
    """Direct normal irradiance in W/m^2."""
    am = np.asarray(air_mass(theta_z, cfg))
    if cfg.am_form == "literal":
        out = cfg.s0 * cfg.k_atm**am
    else:
        out = cfg.s0 * (cfg.k_atm**am) ** cfg.am_exp
    return _scalar_or_array(out)


def snell_angle(theta_i: float, n_from: float, n_to: float) -> float:
    """Transmitted angle in degrees for the interface actually being crossed."""
    if n_from <= 0 or n_to <= 0:
        raise ValueError("refractive indices must be positive")
    s = n_from * np.sin(np.radians(theta_i)) / n_to
    if s > 1.0:
        raise TotalInternalReflection(f"sin(theta_t) = {s:.4f} > 1")
    return float(np.degrees(np.arcsin(s)))


def _cos_of(theta_i) -> np.ndarray:
    theta_i = np.asarray(theta_i, dtype=np.float64)
    # cos(pi/2) is 6e-17 in floating point; grazing incidence must give R = 1 exactly
    return np.where(theta_i >= 90.0, 0.0, np.cos(np.radians(theta_i)))


def fresnel_components_from_cos(cos_i, n1: float, n2: float):
    """(R_s, R_p) for incidence cosine ``cos_i``, going from index n1 into n2."""
    cos_i = np.clip(np.asarray(cos_i, dtype=np.float64), 0.0, 1.0)
    sin_t = (n1 / n2) * np.sqrt(1.0 - cos_i * cos_i)
    tir = sin_t >= 1.0
    cos_t = np.sqrt(np.clip(1.0 - sin_t * sin_t, 0.0, 1.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        rs = ((n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t)) ** 2
        rp = ((n1 * cos_t - n2 * cos_i) / (n1 * cos_t + n2 * cos_i)) ** 2
    rs = np.where(tir, 1.0, rs)
    rp = np.where(tir, 1.0, rp)
    return rs, rp


def reflectance_from_cos(cos_i, cfg: OpticsConfig = DEFAULT_OPTICS):
    rs, rp = fresnel_components_from_cos(cos_i, cfg.n1, cfg.n2)
    return 0.5 * (rs + rp)


def fresnel_components(theta_i, cfg: OpticsConfig = DEFAULT_OPTICS):
    rs, rp = fresnel_components_from_cos(_cos_of(theta_i), cfg.n1, cfg.n2)
    return _scalar_or_array(rs), _scalar_or_array(rp)


def fresnel_reflectance(theta_i, cfg: OpticsConfig = DEFAULT_OPTICS):
    """Unpolarized reflectance, the mean of R_s and R_p."""
    return _scalar_or_array(reflectance_from_cos(_cos_of(theta_i), cfg))


def transmission(theta_i, cfg: OpticsConfig = DEFAULT_OPTICS):
    return _scalar_or_array(1.0 - reflectance_from_cos(_cos_of(theta_i), cfg))


def subcell_power(theta_i, irradiance, area, cfg: OpticsConfig = DEFAULT_OPTICS):
    """Collected power T * I * cos(theta_i) * A * eta; zero when back-lit or grazing."""
    cos_i = _cos_of(theta_i)
    t = 1.0 - reflectance_from_cos(cos_i, cfg)
    p = t * np.asarray(irradiance) * cos_i * np.asarray(area) * cfg.eta
    return _scalar_or_array(np.where(cos_i > 0.0, p, 0.0))


def brewster_angle(cfg: OpticsConfig = DEFAULT_OPTICS) -> float:
    return float(np.degrees(np.arctan2(cfg.n2, cfg.n1)))
