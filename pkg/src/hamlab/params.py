"""Model parameter space and derived coefficients.

The market has two interacting trader types (fundamentalists and chartists),
a market maker that moves the log price at speed ``beta`` against aggregate
excess demand, and noise traders that add ``sigma_n . dW`` to the price. The
pair ``X = (u, m)`` of price dislocation and momentum is a two-dimensional
Ornstein-Uhlenbeck process

    dX = -theta X dt + big_sigma dW

where, with ``q_i = beta * p_i * alpha_i``::

    theta     = [[q_f, -q_c], [q_f, k - q_c]]
    big_sigma = [[sigma_n - sigma_f], [sigma_n]]

Volatilities are loadings on a two-dimensional Wiener process, so they are
kept as 2-vectors and every "variance" such as ``sigma_f sigma_f^T`` is a dot
product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .errors import InvalidParamsError

INFINITE = math.inf
"""Distinguished look-back horizon: momentum with no delay term."""

P_SUM_TOL = 1e-12


def _vec2(value) -> tuple[float, float]:
    arr = tuple(float(v) for v in value)
    if len(arr) != 2:
        raise ValueError(f"expected a 2-vector, got {len(arr)} components")
    return arr  # type: ignore[return-value]


@dataclass(frozen=True)
class ModelParams:
    """Exogenous constants of the market model.

    Rates are per year; volatility loadings are per square-root year.
    ``tau`` is the momentum look-back horizon, :data:`INFINITE` for the
    delay-free limit.
    """

    mu: float
    sigma_f: tuple[float, float]
    sigma_n: tuple[float, float]
    big_z: float
    alpha_f: float
    alpha_c: float
    p_f: float
    p_c: float
    beta: float
    k: float
    tau: float = INFINITE

    def __post_init__(self):
        object.__setattr__(self, "sigma_f", _vec2(self.sigma_f))
        object.__setattr__(self, "sigma_n", _vec2(self.sigma_n))
        for name in SCALAR_FIELDS:
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def tau_is_infinite(self) -> bool:
        return math.isinf(self.tau)

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


SCALAR_FIELDS = (
    "mu", "big_z", "alpha_f", "alpha_c", "p_f", "p_c", "beta", "k", "tau",
)
VECTOR_FIELDS = ("sigma_f", "sigma_n")


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __iter__(self) -> Iterator[str]:
        return iter(self.violations)


def validate(params: ModelParams) -> ValidationResult:
    """Check every domain restriction; violations are returned, never raised."""
    v: list[str] = []
    for name in SCALAR_FIELDS:
        x = getattr(params, name)
        if math.isnan(x) or (math.isinf(x) and name != "tau"):
            v.append(f"{name} must be finite")
    for name in VECTOR_FIELDS:
        if not all(math.isfinite(x) for x in getattr(params, name)):
            v.append(f"{name} must be finite")
    if v:
        return ValidationResult(tuple(v))

    for name in ("p_f", "p_c"):
        x = getattr(params, name)
        if not 0.0 <= x <= 1.0:
            v.append(f"{name} must lie in [0, 1]")
    if abs(params.p_f + params.p_c - 1.0) > P_SUM_TOL:
        v.append("population ratios must sum to 1")
    for name in ("alpha_f", "alpha_c", "beta"):
        if getattr(params, name) < 0.0:
            v.append(f"{name} must be non-negative")
    if not params.k > 0.0:
        v.append("k must be strictly positive")
    if not params.big_z > 0.0:
        v.append("big_z must be strictly positive")
    if not params.tau > 0.0:
        v.append("tau must be strictly positive")
    return ValidationResult(tuple(v))


def require_valid(params: ModelParams) -> None:
    result = validate(params)
    if not result.ok:
        raise InvalidParamsError(result.violations)


@dataclass(frozen=True)
class DerivedCoefficients:
    """Coefficients of the reduced (u, m) system and the price/wealth drifts."""

    q_f: float
    q_c: float
    k: float
    sigma_f: np.ndarray
    sigma_n: np.ndarray
    sigma_u: np.ndarray
    drift_const: float
    theta: np.ndarray = field(repr=False)
    big_sigma: np.ndarray = field(repr=False)

    @property
    def sigma_f_sq(self) -> float:
        return float(self.sigma_f @ self.sigma_f)

    @property
    def sigma_n_sq(self) -> float:
        return float(self.sigma_n @ self.sigma_n)

    @property
    def sigma_u_sq(self) -> float:
        return float(self.sigma_u @ self.sigma_u)

    @property
    def trace_closed_form(self) -> float:
        return self.q_f + self.k - self.q_c

    @property
    def det_closed_form(self) -> float:
        return self.q_f * self.k


def derive_coefficients(params: ModelParams) -> DerivedCoefficients:
    require_valid(params)
    q_f = params.beta * params.p_f * params.alpha_f
    q_c = params.beta * params.p_c * params.alpha_c
    k = params.k
    sigma_f = np.array(params.sigma_f, dtype=float)
    sigma_n = np.array(params.sigma_n, dtype=float)
    sigma_u = sigma_n - sigma_f
    theta = np.array([[q_f, -q_c], [q_f, k - q_c]])
    big_sigma = np.vstack([sigma_u, sigma_n])
    for arr in (sigma_f, sigma_n, sigma_u, theta, big_sigma):
        arr.setflags(write=False)
    return DerivedCoefficients(
        q_f=q_f,
        q_c=q_c,
        k=k,
        sigma_f=sigma_f,
        sigma_n=sigma_n,
        sigma_u=sigma_u,
        drift_const=params.mu - float(sigma_f @ sigma_f) / 2.0,
        theta=theta,
        big_sigma=big_sigma,
    )

