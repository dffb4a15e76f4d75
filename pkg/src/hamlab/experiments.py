"""Parameter sweeps and simulator-versus-closed-form convergence studies."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .analytics import (
    ProfitabilityReport,
    StabilityReport,
    StationaryMoments,
    check_stability,
    is_degenerate,
    momentum_variance_ratio,
    profitability,
    stationary_moments,
)
from .errors import InvalidConfigError, PathsOverflowedError, ZeroNoiseError
from .params import SCALAR_FIELDS, ModelParams, validate
from .simulator import (
    STATISTICS,
    ErgodicEstimates,
    SimConfig,
    config_violations,
    euler_amplification,
    monte_carlo,
)

MODES = ("analytic", "simulated", "both")
STATUSES = ("stable", "unstable", "degenerate", "overflowed")


@dataclass(frozen=True)
class SweepAxis:
    name: str
    lo: float
    hi: float
    n: int

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class SweepSpec:
    """One- or two-axis linear grid around ``base``.

    Sweeping ``p_f`` (or ``p_c``) sets the other ratio to its complement.
    ``sim`` is required for the simulated modes; point ``i`` is seeded with
    ``sim.seed ^ i``.
    """

    base: ModelParams
    axes: tuple[SweepAxis, ...]
    mode: str = "analytic"
    sim: SimConfig | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.n for a in self.axes)

    @property
    def n_points(self) -> int:
        return math.prod(self.shape)


def sweep_violations(spec: SweepSpec) -> list[str]:
    v = [f"base: {msg}" for msg in validate(spec.base)]
    if not 1 <= len(spec.axes) <= 2:
        v.append("a sweep has one or two axes")
    names = [a.name for a in spec.axes]
    if len(set(names)) != len(names):
        v.append("swept parameter names must be distinct")
    if {"p_f", "p_c"} <= set(names):
        v.append("p_f and p_c cannot be swept together")
    for a in spec.axes:
        if a.name not in SCALAR_FIELDS:
            v.append(f"unknown sweep parameter {a.name!r}")
        if isinstance(a.n, bool) or not isinstance(a.n, int) or a.n < 1:
            v.append(f"axis {a.name!r}: n must be an integer >= 1")
        if not (math.isfinite(a.lo) and math.isfinite(a.hi)):
            v.append(f"axis {a.name!r}: bounds must be finite")
    if spec.mode not in MODES:
        v.append(f"mode must be one of {MODES}")
    elif spec.mode != "analytic":
        if spec.sim is None:
            v.append("simulated sweeps need a sim section")
        else:
            v.extend(f"sim: {msg}" for msg in config_violations(spec.base, spec.sim))
    return v


def point_params(base: ModelParams, coords: dict[str, float]) -> ModelParams:
    changes = dict(coords)
    if "p_f" in coords:
        changes["p_c"] = 1.0 - coords["p_f"]
    elif "p_c" in coords:
        changes["p_f"] = 1.0 - coords["p_c"]
    return base.replace(**changes)


@dataclass(frozen=True)
class SweepPoint:
    index: int
    coords: tuple[float, ...]
    params: ModelParams
    status: str
    stability: StabilityReport
    moments: StationaryMoments | None = None
    profitability: ProfitabilityReport | None = None
    variance_ratio: float | None = None
    estimates: ErgodicEstimates | None = field(default=None, repr=False)
    note: str = ""


def evaluate_point(spec: SweepSpec, index: int, coords: tuple[float, ...]) -> SweepPoint:
    """Evaluate a single grid point; depends on nothing but ``spec`` and ``index``."""
    params = point_params(spec.base, dict(zip((a.name for a in spec.axes), coords)))
    bad = validate(params)
    if not bad.ok:
        raise InvalidConfigError(f"grid point {index}: " + "; ".join(bad))
    stab = check_stability(params)
    if is_degenerate(params):
        return SweepPoint(index, coords, params, "degenerate", stab,
                          note="closed-form denominator is zero")
    if not stab.stable:
        return SweepPoint(index, coords, params, "unstable", stab)

    moments = prof = ratio = None
    note = ""
    if params.tau_is_infinite:
        moments = stationary_moments(params)
        prof = profitability(params)
        try:
            ratio = momentum_variance_ratio(params)
        except ZeroNoiseError:
            note = "zero noise: variance ratio undefined"

    est = None
    status = "stable"
    if spec.mode != "analytic":
        cfg = spec.sim.replace(seed=spec.sim.seed ^ index)
        try:
            est = monte_carlo(params, cfg)
        except PathsOverflowedError as exc:
            status = "overflowed"
            note = str(exc)
    return SweepPoint(index, coords, params, status, stab, moments, prof, ratio, est, note)


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    points: tuple[SweepPoint, ...]

    @property
    def axis_values(self) -> tuple[np.ndarray, ...]:
        return tuple(a.values for a in self.spec.axes)

    def status_grid(self) -> np.ndarray:
        return np.array([p.status for p in self.points]).reshape(self.spec.shape)

    def frontier(self) -> list[tuple[int, int]]:
        """Index pairs of grid neighbours whose stability verdicts differ."""
        shape = self.spec.shape
        stable = np.array([p.stability.stable for p in self.points]).reshape(shape)
        pairs = []
        for idx in product(*(range(n) for n in shape)):
            for ax in range(len(shape)):
                nxt = list(idx)
                nxt[ax] += 1
                if nxt[ax] >= shape[ax]:
                    continue
                if stable[idx] != stable[tuple(nxt)]:
                    pairs.append((int(np.ravel_multi_index(idx, shape)),
                                  int(np.ravel_multi_index(tuple(nxt), shape))))
        return pairs

    def statistic_names(self) -> tuple[str, ...]:
        names = list(ANALYTIC_STATISTICS)
        if self.spec.mode != "analytic":
            for s in STATISTICS:
                names += ["est_" + s, "se_" + s]
        return tuple(names)

    def rows(self):
        """Long format: ``(point_index, *coords, status, statistic, value)``."""
        names = self.statistic_names()
        for p in self.points:
            values = point_statistics(p)
            for name in names:
                yield (p.index, *p.coords, p.status, name, values.get(name, math.nan))


ANALYTIC_STATISTICS = (
    "c1_margin", "c2_value", "eig_re_min", "stable_by_conditions", "stable_by_spectrum",
    "var_u", "cov_um", "var_m", "variance_ratio", "c_const", "pi_f", "pi_c", "gap",
)


def point_statistics(p: SweepPoint) -> dict[str, float]:
    out = {
        "c1_margin": p.stability.c1_margin,
        "c2_value": p.stability.c2_value,
        "eig_re_min": p.stability.min_real_eigenvalue,
        "stable_by_conditions": float(p.stability.stable_by_conditions),
        "stable_by_spectrum": float(p.stability.stable_by_spectrum),
    }
    if p.moments is not None:
        out.update(var_u=p.moments.var_u, cov_um=p.moments.cov_um, var_m=p.moments.var_m)
    if p.variance_ratio is not None:
        out["variance_ratio"] = p.variance_ratio
    if p.profitability is not None:
        r = p.profitability
        out.update(c_const=r.c_const, pi_f=r.pi_f, pi_c=r.pi_c, gap=r.gap)
    if p.estimates is not None:
        for s in STATISTICS:
            out["est_" + s], out["se_" + s] = p.estimates.statistic(s)
    return out


def grid_coordinates(spec: SweepSpec) -> list[tuple[float, ...]]:
    return [tuple(float(c) for c in cs) for cs in product(*(a.values for a in spec.axes))]


def run_sweep(spec: SweepSpec, *, workers: int = 1) -> SweepResult:
    bad = sweep_violations(spec)
    if bad:
        raise InvalidConfigError("; ".join(bad))
    coords = grid_coordinates(spec)
    tasks = list(enumerate(coords))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(lambda t: evaluate_point(spec, *t), tasks))
    else:
        points = [evaluate_point(spec, i, c) for i, c in tasks]
    return SweepResult(spec, tuple(points))


@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    amplification: float
    divergent: bool
    estimates: ErgodicEstimates | None
    errors: dict[str, float]
    note: str = ""


def convergence_study(
    params: ModelParams,
    dts,
    config: SimConfig,
    *,
    workers: int = 1,
) -> list[ConvergenceRow]:
    """Monte-Carlo error against the closed forms for each step size.

    A step size is flagged divergent when the Euler amplification matrix
    ``I - theta dt`` has spectral radius >= 1; such rows are still run and an
    overflow is recorded rather than raised.
    """
    moments = stationary_moments(params)
    prof = profitability(params)
    truth = {
        "var_u": moments.var_u, "cov_um": moments.cov_um, "var_m": moments.var_m,
        "mean_u": 0.0, "mean_m": 0.0, "pi_f": prof.pi_f, "pi_c": prof.pi_c,
    }
    rows = []
    for dt in dts:
        amp = euler_amplification(params, dt)
        divergent = amp >= 1.0
        cfg = config.replace(dt=float(dt))
        try:
            est = monte_carlo(params, cfg, workers=workers)
        except PathsOverflowedError as exc:
            rows.append(ConvergenceRow(float(dt), amp, True, None,
                                       {s: math.nan for s in truth}, str(exc)))
            continue
        errs = {s: abs(getattr(est, "est_" + s) - v) for s, v in truth.items()}
        rows.append(ConvergenceRow(float(dt), amp, divergent, est, errs))
    return rows
