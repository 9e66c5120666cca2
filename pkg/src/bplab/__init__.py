"""Numerical verification of Busemann-Petty type comparison theorems for measures."""

from .densities import Density, PowerSum
from .engine import MonotonePair, PiecewiseRadial, Scenario, Settings, run_scenario
from .geometry import Ball, Ellipsoid, LpBall, PerturbedBall, TabulatedBody, body_from_spec
from .quadrature import build_sphere_quadrature, build_subsphere_quadrature
from .scenario import builtin_scenario, load_scenario, parse_scenario, serialize
from .transforms import ft_multiplier, funk_lambda, pd_test

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "Density",
    "Ellipsoid",
    "LpBall",
    "MonotonePair",
    "PerturbedBall",
    "PiecewiseRadial",
    "PowerSum",
    "Scenario",
    "Settings",
    "TabulatedBody",
    "body_from_spec",
    "build_sphere_quadrature",
    "build_subsphere_quadrature",
    "builtin_scenario",
    "ft_multiplier",
    "funk_lambda",
    "load_scenario",
    "parse_scenario",
    "pd_test",
    "run_scenario",
    "serialize",
]
