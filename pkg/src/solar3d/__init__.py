"""Daily-energy simulation, validity guards and search harness for 3D photovoltaic geometry."""

from .geom import BoundingBox, Mesh, parse_geometry, serialize_geometry
from .guards import GuardConfig, score
from .optics import OpticsConfig
from .sim import SimConfig, simulate_day
from .solar import Site

__all__ = [
    "BoundingBox",
    "GuardConfig",
    "Mesh",
    "OpticsConfig",
    "SimConfig",
    "Site",
    "parse_geometry",
    "score",
    "serialize_geometry",
    "simulate_day",
]
