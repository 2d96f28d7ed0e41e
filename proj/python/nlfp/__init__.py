"""Nonlinear Fokker-Planck solver, McKean-Vlasov particles and verification experiments."""

from ._nlfp import (
    ConfigError,
    CoefficientSet,
    DomainError,
    DomainTooSmallError,
    Error,
    Mesh,
    SolverError,
    coupling_experiment,
    kde_density,
    lipschitz_certificate,
    maximal_function,
    parse_config,
    preset,
    presets,
    project_gaussian,
    run_config,
    simulate_decoupled,
    solve,
    validate_conditions,
    weak_form_residual,
)

__all__ = [
    "ConfigError",
    "CoefficientSet",
    "DomainError",
    "DomainTooSmallError",
    "Error",
    "Mesh",
    "SolverError",
    "coupling_experiment",
    "kde_density",
    "lipschitz_certificate",
    "maximal_function",
    "parse_config",
    "preset",
    "presets",
    "project_gaussian",
    "run_config",
    "simulate_decoupled",
    "solve",
    "validate_conditions",
    "weak_form_residual",
]
