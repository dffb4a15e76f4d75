"""Closed-form results for the stable market, plus a Lyapunov oracle.

Everything here is a pure function of :class:`~hamlab.params.ModelParams`.
Stability is judged twice, once from the two closed-form conditions on the
relative strengths and once from the spectrum of ``theta``; the stationary
covariance is available both from its closed form and from a direct solve of
``theta rho + rho theta^T = big_sigma big_sigma^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDenominatorError,
    SingularSystemError,
    UnstableMarketError,
    UnstableThetaError,
    ZeroNoiseError,
)
from .params import DerivedCoefficients, ModelParams, derive_coefficients

LYAPUNOV_RESIDUAL_TOL = 1e-10
LYAPUNOV_MAX_COND = 1e13
GAP_IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class StabilityReport:
    c1_margin: float
    c2_value: float
    eigenvalues: tuple[complex, complex]
    stable_by_conditions: bool
    stable_by_spectrum: bool

    @property
    def stable(self) -> bool:
        return self.stable_by_conditions

    @property
    def min_real_eigenvalue(self) -> float:
        return min(ev.real for ev in self.eigenvalues)


@dataclass(frozen=True)
class StationaryMoments:
    """Second moments of the limiting (zero-mean) normal law of (u, m)."""

    var_u: float
    cov_um: float
    var_m: float

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.var_u, self.cov_um], [self.cov_um, self.var_m]])


@dataclass(frozen=True)
class ProfitabilityReport:
    c_const: float
    pi_f: float
    pi_c: float
    gap: float


def check_stability(params: ModelParams) -> StabilityReport:
    """Evaluate both stability criteria.

    Verdicts use strict inequalities with no dead-band; the margins are
    reported so callers can apply their own.
    """
    dc = derive_coefficients(params)
    c1_margin = params.k - params.beta * (
        params.p_c * params.alpha_c - params.p_f * params.alpha_f
    )
    c2_value = params.beta * params.p_f * params.alpha_f
    eig = np.linalg.eigvals(dc.theta)
    eig = sorted((complex(e) for e in eig), key=lambda z: (z.real, z.imag))
    return StabilityReport(
        c1_margin=c1_margin,
        c2_value=c2_value,
        eigenvalues=(eig[0], eig[1]),
        stable_by_conditions=bool(c1_margin > 0.0 and c2_value > 0.0),
        stable_by_spectrum=bool(min(e.real for e in eig) > 0.0),
    )


def _require_positive_spectrum(theta: np.ndarray) -> None:
    if np.min(np.linalg.eigvals(theta).real) <= 0.0:
        raise UnstableThetaError("theta has an eigenvalue with non-positive real part")


def solve_lyapunov(theta, big_sigma) -> np.ndarray:
    """Stationary covariance of ``dX = -theta X dt + big_sigma dW``.

    Solves ``theta rho + rho theta^T = big_sigma big_sigma^T`` as a 3x3 linear
    system in ``(rho11, rho12, rho22)``.
    """
    theta = np.asarray(theta, dtype=float)
    big_sigma = np.asarray(big_sigma, dtype=float)
    if theta.shape != (2, 2) or big_sigma.shape[0] != 2:
        raise ValueError("theta must be 2x2 and big_sigma must have 2 rows")
    _require_positive_spectrum(theta)

    q = big_sigma @ big_sigma.T
    (a, b), (c, d) = theta
    lhs = np.array([
        [2.0 * a, 2.0 * b, 0.0],
        [c, a + d, b],
        [0.0, 2.0 * c, 2.0 * d],
    ])
    rhs = np.array([q[0, 0], q[0, 1], q[1, 1]])
    if not np.isfinite(np.linalg.cond(lhs)) or np.linalg.cond(lhs) > LYAPUNOV_MAX_COND:
        raise SingularSystemError("Lyapunov system is singular or ill-conditioned")
    r11, r12, r22 = np.linalg.solve(lhs, rhs)
    rho = np.array([[r11, r12], [r12, r22]])

    resid = theta @ rho + rho @ theta.T - q
    scale = max(np.linalg.norm(q), np.finfo(float).tiny)
    if np.linalg.norm(resid) > LYAPUNOV_RESIDUAL_TOL * scale:
        raise SingularSystemError(
            f"Lyapunov residual {np.linalg.norm(resid):.3e} exceeds tolerance"
        )
    return rho


def _denominators(dc: DerivedCoefficients) -> float:
    return dc.q_f * dc.k * (dc.q_f + dc.k - dc.q_c)


def is_degenerate(params: ModelParams) -> bool:
    """True when the closed-form denominators ``q_f k (q_f + k - q_c)`` vanish."""
    return _denominators(derive_coefficients(params)) == 0.0


def _require_stable(params: ModelParams, dc: DerivedCoefficients) -> None:
    if _denominators(dc) == 0.0:
        raise DegenerateDenominatorError(
            "q_f * k * (q_f + k - q_c) = 0; closed forms are undefined"
        )
    report = check_stability(params)
    if not report.stable:
        raise UnstableMarketError(
            f"market is unstable (c1_margin={report.c1_margin:.6g}, "
            f"c2_value={report.c2_value:.6g})"
        )


def stationary_moments(params: ModelParams) -> StationaryMoments:
    dc = derive_coefficients(params)
    _require_stable(params, dc)
    q_f, q_c, k = dc.q_f, dc.q_c, dc.k
    s_f, s_u = dc.sigma_f, dc.sigma_u
    denom = q_f + k - q_c

    mixed = k * s_u + q_c * s_f
    var_u = (mixed @ mixed + q_f * k * dc.sigma_u_sq) / (2.0 * q_f * k * denom)
    cov_um = ((q_c - k) * dc.sigma_f_sq + k * dc.sigma_n_sq) / (2.0 * k * denom)
    var_m = (q_f * dc.sigma_f_sq + k * dc.sigma_n_sq) / (2.0 * k * denom)
    return StationaryMoments(float(var_u), float(cov_um), float(var_m))


def momentum_stationary_variance(params: ModelParams) -> float:
    """Closed-form ``E[m^2]`` whenever momentum alone is stationary.

    This covers the stable market and also the decoupled case ``q_f = 0``
    (for instance ``beta = 0``), where ``m`` is a scalar OU process with rate
    ``k - q_c`` regardless of the behaviour of ``u``.
    """
    dc = derive_coefficients(params)
    denom = dc.q_f + dc.k - dc.q_c
    if dc.q_f == 0.0:
        if not denom > 0.0:
            raise UnstableMarketError("momentum is not mean-reverting (k <= q_c)")
    else:
        _require_stable(params, dc)
    return (dc.q_f * dc.sigma_f_sq + dc.k * dc.sigma_n_sq) / (2.0 * dc.k * denom)


def benchmark_momentum_variance(params: ModelParams) -> float:
    """Momentum variance of the reference market with no price impact (beta = 0)."""
    dc = derive_coefficients(params)
    return dc.sigma_n_sq / (2.0 * dc.k)


def momentum_variance_ratio(params: ModelParams) -> float:
    """Momentum variance relative to the no-impact benchmark."""
    dc = derive_coefficients(params)
    _require_stable(params, dc)
    if dc.sigma_n_sq == 0.0:
        raise ZeroNoiseError("sigma_n is zero; benchmark momentum variance vanishes")
    denom = dc.q_f + dc.k - dc.q_c
    return dc.q_f / denom * (dc.sigma_f_sq / dc.sigma_n_sq) + dc.k / denom


def growth_constant(params: ModelParams) -> float:
    """Log-growth of a portfolio holding the constant weight ``big_z``."""
    dc = derive_coefficients(params)
    z = params.big_z
    return z * (params.mu - dc.sigma_f_sq / 2.0 + (1.0 - z) * dc.sigma_n_sq / 2.0)


def growth_difference(params: ModelParams, moments: StationaryMoments) -> float:
    """Long-run log-growth advantage of fundamentalists over chartists.

    Evaluated term by term from the moments, independently of the two
    individual growth rates.
    """
    dc = derive_coefficients(params)
    a_f, a_c = params.alpha_f, params.alpha_c
    noise_term = dc.sigma_n_sq / 2.0 * (
        a_c**2 * moments.var_m - a_f**2 * moments.var_u
    )
    cross_term = (params.p_f - params.p_c) * params.beta * a_f * a_c * moments.cov_um
    impact_term = params.beta * (
        params.p_f * a_f**2 * moments.var_u - params.p_c * a_c**2 * moments.var_m
    )
    return noise_term + cross_term + impact_term


def profitability(params: ModelParams) -> ProfitabilityReport:
    dc = derive_coefficients(params)
    mom = stationary_moments(params)
    half_nn = dc.sigma_n_sq / 2.0
    a_f, a_c, beta = params.alpha_f, params.alpha_c, params.beta
    c = growth_constant(params)

    terms_f = (
        beta * params.p_f * a_f**2 * mom.var_u,
        -beta * params.p_c * a_c * a_f * mom.cov_um,
        -a_f**2 * half_nn * mom.var_u,
    )
    terms_c = (
        beta * params.p_c * a_c**2 * mom.var_m,
        -beta * params.p_f * a_f * a_c * mom.cov_um,
        -a_c**2 * half_nn * mom.var_m,
    )
    pi_f = c + sum(terms_f)
    pi_c = c + sum(terms_c)
    gap = pi_f - pi_c
    other = growth_difference(params, mom)
    # rounding in the two routes scales with the largest term, not with the result
    scale = max(1.0, sum(abs(t) for t in terms_f + terms_c))
    if not abs(gap - other) <= GAP_IDENTITY_TOL * scale:
        raise ArithmeticError(
            f"growth-difference identity violated: {gap!r} vs {other!r}"
        )
    return ProfitabilityReport(c_const=c, pi_f=pi_f, pi_c=pi_c, gap=gap)


def slowest_decay_rate(params: ModelParams) -> float:
    """Smallest real part of the spectrum of theta (mixing rate of (u, m))."""
    return check_stability(params).min_real_eigenvalue


def characteristic_roots(params: ModelParams) -> tuple[complex, complex]:
    """Eigenvalues of theta from ``l^2 - tr l + det = 0``, smaller real part first."""
    dc = derive_coefficients(params)
    tr = dc.trace_closed_form
    det = dc.det_closed_form
    disc = complex(tr * tr - 4.0 * det)
    root = disc ** 0.5
    lo, hi = (tr - root) / 2.0, (tr + root) / 2.0
    return tuple(sorted((lo, hi), key=lambda z: (z.real, z.imag)))  # type: ignore[return-value]
