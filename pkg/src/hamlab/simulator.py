"""Seeded path simulation and ergodic Monte-Carlo estimators.

Paths integrate ``(f, u, m)`` together with the log wealth of a fundamentalist
and a chartist portfolio, both started at ``V = 1``. Noise for step ``n`` of
path ``p`` comes from :mod:`hamlab.noise`, so every path is a pure function of
``(params, config, p)`` and paths can run in any order or concurrently.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import _kernels as K
from .analytics import check_stability
from .errors import (
    DelayBufferUnderflowError,
    InvalidConfigError,
    NumericOverflowError,
    PathsOverflowedError,
)
from .noise import iter_blocks
from .params import ModelParams, derive_coefficients, require_valid

OVERFLOW_THRESHOLD = 1e12
SCHEMES = ("euler", "exact")
_GRID_TOL = 1e-9


@dataclass(frozen=True)
class InitialState:
    f: float = 0.0
    u: float = 0.0
    m: float = 0.0
    log_v_f: float = 0.0
    log_v_c: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.f, self.u, self.m, self.log_v_f, self.log_v_c], dtype=float)


@dataclass(frozen=True)
class SimConfig:
    """Time grid, path count and seeding of a simulation run.

    ``burn_in_t=None`` selects the default burn-in for the model being run
    (see :func:`default_burn_in`). ``scheme="exact"`` samples the affine
    ``(f, u, m)`` block from its exact Gaussian transition instead of
    Euler-Maruyama; it does not integrate wealth and needs ``tau`` infinite.
    """

    dt: float
    horizon_t: float
    burn_in_t: float | None = None
    n_paths: int = 1
    seed: int = 0
    record_stride: int = 1
    initial: InitialState = field(default_factory=InitialState)
    scheme: str = "euler"
    burn_in_profitability: bool = False

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon_t / self.dt))

    @property
    def burn_in_steps(self) -> int:
        if self.burn_in_t is None:
            raise InvalidConfigError("burn-in is unresolved; call resolve_config first")
        return int(math.ceil(self.burn_in_t / self.dt - _GRID_TOL))

    def replace(self, **changes) -> "SimConfig":
        return replace(self, **changes)


def default_burn_in(params: ModelParams) -> float:
    """``max(10/k, 10/slowest decay rate, 5 tau)`` rounded up to whole years."""
    candidates = [10.0 / params.k]
    rate = check_stability(params).min_real_eigenvalue
    if rate > 0.0:
        candidates.append(10.0 / rate)
    if not params.tau_is_infinite:
        candidates.append(5.0 * params.tau)
    return float(math.ceil(max(candidates)))


def config_violations(params: ModelParams, config: SimConfig) -> list[str]:
    v: list[str] = []
    if not (math.isfinite(config.dt) and config.dt > 0.0):
        v.append("dt must be positive")
    if not (math.isfinite(config.horizon_t) and config.horizon_t > 0.0):
        v.append("horizon_t must be positive")
    if v:
        return v
    n = config.horizon_t / config.dt
    if n < 1.0 or abs(n - round(n)) > _GRID_TOL * max(1.0, n):
        v.append("horizon_t must be a whole number of dt steps")
    if config.burn_in_t is not None:
        if not (math.isfinite(config.burn_in_t) and config.burn_in_t >= 0.0):
            v.append("burn_in_t must be non-negative")
        elif not config.burn_in_t < config.horizon_t:
            v.append("burn_in_t must be smaller than horizon_t")
    if isinstance(config.n_paths, bool) or not isinstance(config.n_paths, int) or config.n_paths < 1:
        v.append("n_paths must be an integer >= 1")
    if isinstance(config.seed, bool) or not isinstance(config.seed, int) or not 0 <= config.seed < 2**64:
        v.append("seed must be an unsigned 64-bit integer")
    if (
        isinstance(config.record_stride, bool)
        or not isinstance(config.record_stride, int)
        or config.record_stride < 1
    ):
        v.append("record_stride must be an integer >= 1")
    if config.scheme not in SCHEMES:
        v.append(f"scheme must be one of {SCHEMES}")
    elif config.scheme == "exact" and not params.tau_is_infinite:
        v.append("the exact scheme requires tau = infinite")
    if not params.tau_is_infinite and config.dt > params.tau:
        v.append("dt must not exceed tau")
    if not all(math.isfinite(x) for x in config.initial.as_array()):
        v.append("initial state must be finite")
    return v


def resolve_config(params: ModelParams, config: SimConfig) -> SimConfig:
    """Validate and fill in the default burn-in."""
    require_valid(params)
    v = config_violations(params, config)
    if v:
        raise InvalidConfigError("; ".join(v))
    if config.burn_in_t is None:
        burn = default_burn_in(params)
        if not burn < config.horizon_t:
            raise InvalidConfigError(
                f"default burn-in {burn:g} years does not fit in horizon_t={config.horizon_t:g}"
            )
        config = replace(config, burn_in_t=burn)
    return config


@dataclass(frozen=True)
class MarketState:
    t: float
    f: float
    u: float
    m: float
    log_v_f: float
    log_v_c: float

    @property
    def s(self) -> float:
        return self.u + self.f


@dataclass(frozen=True)
class PathSummary:
    """Per-path time averages over post-burn-in recorded states."""

    path_index: int
    n_samples: int
    mean_u: float
    mean_m: float
    mean_uu: float
    mean_um: float
    mean_mm: float
    growth_f: float
    growth_c: float


@dataclass(frozen=True)
class SimPath:
    params: ModelParams
    config: SimConfig
    path_index: int
    integrator: str
    t: np.ndarray
    f: np.ndarray
    u: np.ndarray
    m: np.ndarray
    log_v_f: np.ndarray
    log_v_c: np.ndarray
    summary: PathSummary
    excess_increments: np.ndarray | None = field(default=None, repr=False)

    @property
    def s(self) -> np.ndarray:
        return self.u + self.f

    @property
    def weight_f(self) -> np.ndarray:
        return self.params.big_z - self.params.alpha_f * self.u

    @property
    def weight_c(self) -> np.ndarray:
        return self.params.big_z + self.params.alpha_c * self.m

    def __len__(self) -> int:
        return len(self.t)

    def state(self, i: int) -> MarketState:
        return MarketState(
            float(self.t[i]), float(self.f[i]), float(self.u[i]), float(self.m[i]),
            float(self.log_v_f[i]), float(self.log_v_c[i]),
        )


def _delay_lag(params: ModelParams, dt: float) -> int:
    return int(math.ceil(params.tau / dt - _GRID_TOL))


def _euler_coefficients(params: ModelParams, config: SimConfig) -> np.ndarray:
    dc = derive_coefficients(params)
    coef = np.zeros(K.N_COEF)
    coef[K.DT] = config.dt
    coef[K.SQRT_DT] = math.sqrt(config.dt)
    coef[K.DRIFT] = dc.drift_const
    coef[K.BETA] = params.beta
    coef[K.PF_AF] = params.p_f * params.alpha_f
    coef[K.PC_AC] = params.p_c * params.alpha_c
    coef[K.K] = params.k
    coef[K.BIG_Z] = params.big_z
    coef[K.ALPHA_F] = params.alpha_f
    coef[K.ALPHA_C] = params.alpha_c
    coef[K.SF0], coef[K.SF1] = params.sigma_f
    coef[K.SN0], coef[K.SN1] = params.sigma_n
    coef[K.HALF_NN] = dc.sigma_n_sq / 2.0
    coef[K.DECAY_TAU] = 0.0 if params.tau_is_infinite else math.exp(-params.k * params.tau)
    coef[K.OVERFLOW] = OVERFLOW_THRESHOLD
    return coef


def exact_transition(params: ModelParams, dt: float):
    """One-step law of the affine ``(f, u, m)`` system over ``dt``.

    Returns ``(phi, shift, cov)`` with ``Y' = phi Y + shift + N(0, cov)``.
    """
    dc = derive_coefficients(params)
    a = np.zeros((3, 3))
    a[1:, 1:] = -dc.theta
    b = np.array([dc.drift_const, 0.0, 0.0])
    load = np.vstack([dc.sigma_f, dc.sigma_u, dc.sigma_n])

    aug = np.zeros((4, 4))
    aug[:3, :3] = a
    aug[:3, 3] = b
    e_aug = scipy.linalg.expm(aug * dt)
    phi = e_aug[:3, :3]
    shift = e_aug[:3, 3]

    # Van Loan: integral of e^{As} B B^T e^{A^T s} over [0, dt]
    vl = np.zeros((6, 6))
    vl[:3, :3] = -a
    vl[:3, 3:] = load @ load.T
    vl[3:, 3:] = a.T
    e_vl = scipy.linalg.expm(vl * dt)
    cov = e_vl[3:, 3:].T @ e_vl[:3, 3:]
    cov = (cov + cov.T) / 2.0
    return phi, shift, cov


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, 0.0, None))


def _summary(path_index: int, config: SimConfig, acc: np.ndarray, x: np.ndarray) -> PathSummary:
    n = acc[K.A_N]
    init = config.initial
    if config.burn_in_profitability:
        span = config.horizon_t - config.burn_in_t
        g_f = (x[K.LVF] - acc[K.A_LVF_BURN]) / span
        g_c = (x[K.LVC] - acc[K.A_LVC_BURN]) / span
    else:
        g_f = (x[K.LVF] - init.log_v_f) / config.horizon_t
        g_c = (x[K.LVC] - init.log_v_c) / config.horizon_t
    if config.scheme == "exact":
        g_f = g_c = math.nan
    with np.errstate(invalid="ignore", divide="ignore"):
        means = acc[K.A_U:K.A_MM + 1] / n
    return PathSummary(
        path_index=path_index,
        n_samples=int(n),
        mean_u=float(means[0]),
        mean_m=float(means[1]),
        mean_uu=float(means[2]),
        mean_um=float(means[3]),
        mean_mm=float(means[4]),
        growth_f=float(g_f),
        growth_c=float(g_c),
    )


def _integrate(params, config, path_index, record, keep_increments=False):
    """Run one path; returns (records, summary, increments, integrator name)."""
    n_steps = config.n_steps
    stride = config.record_stride
    burn_step = config.burn_in_steps
    rec = np.empty((n_steps // stride + 1 if record else 0, K.N_STATE))
    acc = np.zeros(K.N_ACC)
    x = config.initial.as_array()
    K.observe_initial(x, stride, burn_step, rec, acc)
    ds_out = np.empty(n_steps if keep_increments else 0)

    if config.scheme == "exact":
        integrator = "exact"
        phi, shift, cov = exact_transition(params, config.dt)
        chol = _psd_sqrt(cov)
        for first, z in iter_blocks(config.seed, path_index, n_steps, dim=3):
            status = K.exact_chunk(
                x, z, first, phi, shift, chol, OVERFLOW_THRESHOLD,
                stride, burn_step, rec, acc,
            )
            if status >= 0:
                raise NumericOverflowError(path_index, status, status * config.dt)
    else:
        coef = _euler_coefficients(params, config)
        if params.tau_is_infinite:
            integrator = "euler"
            lag = 0
            ring = np.zeros(1)
        else:
            integrator = "euler-delay"
            lag = _delay_lag(params, config.dt)
            if lag < 1:
                raise DelayBufferUnderflowError(f"delay lag {lag} < 1 step")
            # pre-history of excess increments is flat
            ring = np.zeros(lag)
        for first, z in iter_blocks(config.seed, path_index, n_steps, dim=2):
            status = K.euler_chunk(
                x, z, first, coef, lag, ring, stride, burn_step, rec, acc, ds_out,
            )
            if status >= 0:
                raise NumericOverflowError(path_index, status, status * config.dt)
        if lag and ring.shape[0] != lag:
            raise DelayBufferUnderflowError("delay buffer changed size during integration")

    summary = _summary(path_index, config, acc, x)
    return rec, summary, (ds_out if keep_increments else None), integrator


def _make_path(params, config, path_index, rec, summary, increments, integrator) -> SimPath:
    t = np.arange(rec.shape[0]) * (config.dt * config.record_stride)
    cols = [np.ascontiguousarray(rec[:, j]) for j in range(K.N_STATE)]
    return SimPath(
        params=params,
        config=config,
        path_index=path_index,
        integrator=integrator,
        t=t,
        f=cols[K.F],
        u=cols[K.U],
        m=cols[K.M],
        log_v_f=cols[K.LVF],
        log_v_c=cols[K.LVC],
        summary=summary,
        excess_increments=increments,
    )


def simulate_path(params: ModelParams, config: SimConfig, path_index: int = 0) -> SimPath:
    """Simulate one path of the delay-free model (``tau`` infinite).

    Stability is not required; unstable parameter sets raise
    :class:`~hamlab.errors.NumericOverflowError` once ``|u|`` or ``|m|``
    exceeds :data:`OVERFLOW_THRESHOLD`.
    """
    if not params.tau_is_infinite:
        raise InvalidConfigError("simulate_path needs tau = infinite; use simulate_path_delay")
    config = resolve_config(params, config)
    rec, summary, _, integrator = _integrate(params, config, path_index, record=True)
    return _make_path(params, config, path_index, rec, summary, None, integrator)


def simulate_path_delay(
    params: ModelParams,
    config: SimConfig,
    path_index: int = 0,
    keep_increments: bool = False,
) -> SimPath:
    """Simulate one path with a finite momentum look-back ``tau``.

    Momentum subtracts the excess log-price increment from ``ceil(tau/dt)``
    steps back, weighted by ``exp(-k tau)``; increments before ``t = 0`` are
    zero. With ``keep_increments`` the excess increment of every step is
    returned in ``SimPath.excess_increments``.
    """
    if params.tau_is_infinite:
        raise InvalidConfigError("simulate_path_delay needs a finite tau")
    config = resolve_config(params, config)
    rec, summary, inc, integrator = _integrate(
        params, config, path_index, record=True, keep_increments=keep_increments
    )
    return _make_path(params, config, path_index, rec, summary, inc, integrator)


def simulate(params: ModelParams, config: SimConfig, path_index: int = 0) -> SimPath:
    """Dispatch on ``tau``: finite selects the delay integrator."""
    if params.tau_is_infinite:
        return simulate_path(params, config, path_index)
    return simulate_path_delay(params, config, path_index)


def momentum_reconstruction_error(path: SimPath) -> np.ndarray:
    """Mismatch between simulated momentum and its defining weighted sum.

    For each recorded time ``t > tau`` the momentum is rebuilt as
    ``sum_v exp(-k (t - v)) ds'_v`` over the increments realised in
    ``(t - tau, t]``. The error is normalised by ``sum_v exp(-k (t - v)) |ds'_v|``
    so it stays meaningful when momentum crosses zero. Needs a delay path
    simulated with ``keep_increments=True``.
    """
    if path.excess_increments is None:
        raise ValueError("path was simulated without keep_increments")
    params, cfg = path.params, path.config
    inc = path.excess_increments
    lag = _delay_lag(params, cfg.dt)
    weights = np.exp(-params.k * cfg.dt * np.arange(lag))
    errs = []
    for row, t in enumerate(path.t):
        n = row * cfg.record_stride
        if n <= lag:
            continue
        window = inc[n - lag:n][::-1]
        terms = weights * window
        recon = terms.sum()
        errs.append(abs(path.m[row] - recon) / np.abs(terms).sum())
    return np.asarray(errs)


@dataclass(frozen=True)
class ErgodicEstimates:
    """Pooled time-and-path averages with across-path standard errors.

    Standard errors are NaN (``se_available`` false) for a single path.
    """

    n_paths: int
    n_samples_per_path: int
    integrator: str
    est_var_u: float
    se_var_u: float
    est_cov_um: float
    se_cov_um: float
    est_var_m: float
    se_var_m: float
    est_mean_u: float
    se_mean_u: float
    est_mean_m: float
    se_mean_m: float
    est_pi_f: float
    se_pi_f: float
    est_pi_c: float
    se_pi_c: float
    per_path: tuple[PathSummary, ...] = field(repr=False, default=())
    paths: tuple[SimPath, ...] = field(repr=False, compare=False, default=())

    @property
    def se_available(self) -> bool:
        return self.n_paths > 1

    def statistic(self, name: str) -> tuple[float, float]:
        return getattr(self, "est_" + name), getattr(self, "se_" + name)


STATISTICS = ("var_u", "cov_um", "var_m", "mean_u", "mean_m", "pi_f", "pi_c")
_SUMMARY_FIELD = {
    "var_u": "mean_uu",
    "cov_um": "mean_um",
    "var_m": "mean_mm",
    "mean_u": "mean_u",
    "mean_m": "mean_m",
    "pi_f": "growth_f",
    "pi_c": "growth_c",
}


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    if len(values) < 2:
        return mean, math.nan
    return mean, float(np.std(values, ddof=1) / math.sqrt(len(values)))


def monte_carlo(
    params: ModelParams,
    config: SimConfig,
    *,
    workers: int = 1,
    keep_paths: int = 0,
) -> ErgodicEstimates:
    """Run ``config.n_paths`` independent paths and pool their estimates.

    Paths are merged in path order, so the result does not depend on
    ``workers``. The first ``keep_paths`` paths are returned with their
    recorded trajectories.
    """
    config = resolve_config(params, config)

    def run(i: int):
        try:
            rec, summary, _, integrator = _integrate(params, config, i, record=i < keep_paths)
        except NumericOverflowError as exc:
            return exc
        path = _make_path(params, config, i, rec, summary, None, integrator) if i < keep_paths else None
        return summary, path, integrator

    indices = range(config.n_paths)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, indices))
    else:
        results = [run(i) for i in indices]

    failures = [r for r in results if isinstance(r, NumericOverflowError)]
    if failures:
        raise PathsOverflowedError(failures, config.n_paths)

    summaries = tuple(r[0] for r in results)
    paths = tuple(r[1] for r in results if r[1] is not None)
    est = {}
    for name in STATISTICS:
        vals = np.array([getattr(s, _SUMMARY_FIELD[name]) for s in summaries])
        est["est_" + name], est["se_" + name] = _mean_se(vals)
    return ErgodicEstimates(
        n_paths=config.n_paths,
        n_samples_per_path=summaries[0].n_samples,
        integrator=results[0][2],
        per_path=summaries,
        paths=paths,
        **est,
    )


def euler_stationary_covariance(theta, big_sigma, dt: float) -> np.ndarray:
    """Stationary covariance of the Euler-Maruyama chain for ``dX = -theta X dt + big_sigma dW``.

    Solves ``P = A P A^T + dt big_sigma big_sigma^T`` with ``A = I - theta dt``;
    the gap to the continuous-time covariance is the scheme's weak error.
    """
    theta = np.asarray(theta, dtype=float)
    big_sigma = np.asarray(big_sigma, dtype=float)
    a = np.eye(theta.shape[0]) - theta * dt
    if np.max(np.abs(np.linalg.eigvals(a))) >= 1.0:
        raise InvalidConfigError("dt is beyond the explicit Euler stability bound")
    return scipy.linalg.solve_discrete_lyapunov(a, dt * big_sigma @ big_sigma.T)


def euler_amplification(params: ModelParams, dt: float) -> float:
    """Spectral radius of ``I - theta dt``; at or above 1 the Euler chain diverges."""
    theta = derive_coefficients(params).theta
    return float(np.max(np.abs(np.linalg.eigvals(np.eye(2) - theta * dt))))
