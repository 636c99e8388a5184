"""Inner variations of planar maps: Dirichlet energy, Hopf products, quadratic differentials."""

__version__ = "0.1.0"

from .domain import PlanarDomain
from .field import Grid, SampledMap, WirtingerJet, build_grid, integrate, jet_of, wirtinger
from .energy import EnergyReport, HopfField, dirichlet_energy, hopf_product, is_hopf_harmonic
from .testfunc import TestFunction, bump, combine, random_battery
from .variation import (InnerVariation, VariationSweep, check_holomorphic_inequality,
                        check_second_variation, check_strict_increase, compose,
                        critical_direction, default_epsilons, energy_difference_exact,
                        eps_max, first_variation, second_variation, variation_sweep)
from .expr import parse
from .quad_diff import (QuadDifferential, Trajectory, circular_map, classify_configuration,
                        distinguished_parameter, h_length, length_area_check, trace_vertical)
from .partition import RectPartition, assign_branches, build_partition, jacobian_sum_check
from . import gallery

__all__ = [
    "PlanarDomain", "Grid", "SampledMap", "WirtingerJet", "build_grid", "integrate", "jet_of",
    "wirtinger", "EnergyReport", "HopfField", "dirichlet_energy", "hopf_product",
    "is_hopf_harmonic", "TestFunction", "bump", "combine", "random_battery", "InnerVariation",
    "VariationSweep", "check_holomorphic_inequality", "check_second_variation",
    "check_strict_increase", "compose", "critical_direction", "default_epsilons",
    "energy_difference_exact", "eps_max", "first_variation", "second_variation",
    "variation_sweep", "parse", "QuadDifferential", "Trajectory", "circular_map",
    "classify_configuration", "distinguished_parameter", "h_length", "length_area_check",
    "trace_vertical", "RectPartition", "assign_branches", "build_partition",
    "jacobian_sum_check", "gallery", "__version__",
]
