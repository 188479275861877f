"""Stochastic and quantum energy-conserving descent on one-dimensional double wells."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (AssumptionViolation, ConfigError, DomainError, EcdError, NoDetection, NoHits,
                     QuadratureError, ResolutionError, SolverError)
from .potential import Landscape, build_maps, distance_I, validate_assumptions
from .secd_analytic import hitting_time_general, hitting_time_symmetric
from .secd_sim import SimConfig, monte_carlo_hitting, run_event_driven, run_ode_raw
from .qecd_spectral import (averaged_prob, build_spectral_model, evolve, hitting_time,
                            initial_gaussian)

__all__ = [
    "BACKEND", "AssumptionViolation", "ConfigError", "DomainError", "EcdError", "NoDetection",
    "NoHits", "QuadratureError", "ResolutionError", "SolverError", "Landscape", "build_maps",
    "distance_I", "validate_assumptions", "hitting_time_general", "hitting_time_symmetric",
    "SimConfig", "monte_carlo_hitting", "run_event_driven", "run_ode_raw", "averaged_prob",
    "build_spectral_model", "evolve", "hitting_time", "initial_gaussian",
]
