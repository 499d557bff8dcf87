"""Rotation numbers, Brouwer degree and rotation-resolved degree of planar period maps."""
__version__ = "0.1.0"

from .kernels import BACKEND, HAVE_COMPILED
from .vectorfield import (SCENARIOS, ScenarioSpec, TimeVaryingField, build_scenario, evaluate_field,
                          example51, expansive_spiral, rigid_rotation, linear_system, duffing_superlinear,
                          asymlin_hamiltonian, perturbed_linear)
from .flow import (IntegratorConfig, DEFAULT_CONFIG, chart, chart_inverse, evolve, flow_summary, lift_trajectory,
                   rotation_number, rotation_numbers, displacement_fT, displacement_FT)
from .boundary import Ball, Rect, GeneralizedAnnulus, annulus, circle, rectangle
from .degree import (brouwer_deg_fT, dee_degree, sigma_set, verify_decomposition, annulus_consistency,
                     check_twist, winding_number, BoundaryEvaluator)
from .locate import PeriodicOrbit, localize, refine_orbit, find_all, find_all_report, floquet_multipliers
from .linear import (LinearSystem, monodromy, nonresonant, linear_degree, rotation_interval, maslov_index,
                     asymptotic_radius)
from .svg import render_snapshot

__all__ = [
    "BACKEND", "HAVE_COMPILED",
    "SCENARIOS", "ScenarioSpec", "TimeVaryingField", "build_scenario", "evaluate_field", "example51",
    "expansive_spiral", "rigid_rotation", "linear_system", "duffing_superlinear", "asymlin_hamiltonian",
    "perturbed_linear",
    "IntegratorConfig", "DEFAULT_CONFIG", "chart", "chart_inverse", "evolve", "flow_summary", "lift_trajectory",
    "rotation_number", "rotation_numbers", "displacement_fT", "displacement_FT",
    "Ball", "Rect", "GeneralizedAnnulus", "annulus", "circle", "rectangle",
    "brouwer_deg_fT", "dee_degree", "sigma_set", "verify_decomposition", "annulus_consistency", "check_twist",
    "winding_number", "BoundaryEvaluator",
    "PeriodicOrbit", "localize", "refine_orbit", "find_all", "find_all_report", "floquet_multipliers",
    "LinearSystem", "monodromy", "nonresonant", "linear_degree", "rotation_interval", "maslov_index",
    "asymptotic_radius", "render_snapshot",
]
