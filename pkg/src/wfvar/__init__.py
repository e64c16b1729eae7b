"""Finite-bounds Fokker action for the electromagnetic two-body problem.

Lightcone delta integrals, exchange-of-history boundary data, action
gradients and minimization, second-variation spectra, Noether invariants.
"""

__version__ = "0.1.0"

from .minkowski import CausalClass, FourVector, classify, gamma_of_velocity, mink_dot
from .trajectory import (
    BoundaryData,
    Perturbation,
    Trajectory,
    apply_perturbation,
    perturbation_norm,
    subluminal_margin,
    validate_ehbc,
)
from .lightcone import (
    LightconeRoot,
    delta_integral,
    delta_integral_derivative,
    find_all_roots,
    find_root,
    vector_potential,
)
from .action import (
    ActionBreakdown,
    classify_extremal,
    fokker_action,
    generalized_action,
    interaction_integral,
    partial_action,
)
from .circular import CircularOrbitSpec, kepler_circular, make_circular_ehbc, refine_circular
from .sewing import SewingChain, SewingGrid, build_backward_chain, build_forward_chain, build_grid
from .gradient import discrete_action_gradient, eom_residual, lw_force
from .second_variation import (
    QuadraticForm,
    assemble_hessian,
    bifurcation_scan,
    fourier_bound_check,
    interaction_quadratic,
    kinetic_quadratic,
    large_radius_forms,
)
from .invariants import conservation_drift, noether_angular, noether_momentum, particle_momentum
from .solver import SolveOptions, SolveReport, minimize_report_consistency, solve
