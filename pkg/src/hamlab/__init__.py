"""Continuous-time heterogeneous agent market model: closed forms and simulation."""

from .analytics import (
    ProfitabilityReport,
    StabilityReport,
    StationaryMoments,
    check_stability,
    momentum_variance_ratio,
    profitability,
    solve_lyapunov,
    stationary_moments,
)
from .params import INFINITE, DerivedCoefficients, ModelParams, derive_coefficients, validate
from .simulator import (
    ErgodicEstimates,
    InitialState,
    SimConfig,
    SimPath,
    monte_carlo,
    simulate,
    simulate_path,
    simulate_path_delay,
)

__version__ = "0.1.0"

__all__ = [
    "INFINITE",
    "DerivedCoefficients",
    "ErgodicEstimates",
    "InitialState",
    "ModelParams",
    "ProfitabilityReport",
    "SimConfig",
    "SimPath",
    "StabilityReport",
    "StationaryMoments",
    "check_stability",
    "derive_coefficients",
    "momentum_variance_ratio",
    "monte_carlo",
    "profitability",
    "simulate",
    "simulate_path",
    "simulate_path_delay",
    "solve_lyapunov",
    "stationary_moments",
    "validate",
]
