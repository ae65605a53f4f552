"""Ginzburg-Landau reference energies: the bulk density g(b) from constant-field
squares, the surface energy E(L) from vanishing-field strips, and the checks
that tie them together.
"""

from .fieldcore import (
    EnergyParams, EnergyReport, GaugeLinks, Grid, build_links, energy, gauge_transform, gradient,
)
from .gfunc import GTable, g_interp, integral_g, tabulate_g
from .solver import minimize
from .square import EigenProblem, SquareProblem, e_D, e_N, minimize_square, mu1, theta1_estimate
from .strip import ETable, StripProblem, estimate_E, minimize_strip, tabulate_E

__all__ = [
    "EnergyParams", "EnergyReport", "GaugeLinks", "Grid", "build_links", "energy",
    "gauge_transform", "gradient", "minimize", "GTable", "g_interp", "integral_g", "tabulate_g",
    "EigenProblem", "SquareProblem", "e_D", "e_N", "minimize_square", "mu1", "theta1_estimate",
    "ETable", "StripProblem", "estimate_E", "minimize_strip", "tabulate_E",
]
