"""Minimal speeds of KPP fronts in shear flows with anisotropic diffusion.

The core pipeline is ``geometry`` (cross-section grids) -> ``model`` (flow,
reaction, diffusion) -> ``eigensolver`` (principal eigenvalue of the cell
operator) -> ``speed`` (``c* = min k(lambda)/lambda``).  ``asymptotics``
builds limits and counterexamples on top; ``frontsim`` is an independent
time-domain check; ``cli`` is the command-line front end.
"""
from .errors import (BracketingError, ConvergenceError, DomainOverrunError, PremiseError, SearchBudgetError,
                     SolverError, SpeedLabError, ValidationError)
from .geometry import BoundaryKind, CrossSection, make_grid
from .model import (DiffusionSpec, KppReaction, ProblemSpec, ShearFlow, cosine_flow, kpp_check, logistic,
                    polynomial, pwl_flow, zero_flow)
from .speed import minimal_speed, rescale_identity_check, speed_for_Ab, speed_isotropic

__version__ = "0.1.0"

__all__ = [
    "BoundaryKind", "BracketingError", "ConvergenceError", "CrossSection", "DiffusionSpec", "DomainOverrunError",
    "KppReaction", "PremiseError", "ProblemSpec", "SearchBudgetError", "ShearFlow", "SolverError",
    "SpeedLabError", "ValidationError", "cosine_flow", "kpp_check", "logistic", "make_grid", "minimal_speed",
    "polynomial", "pwl_flow", "rescale_identity_check", "speed_for_Ab", "speed_isotropic", "zero_flow",
]
