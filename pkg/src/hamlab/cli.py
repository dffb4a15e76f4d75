"""Command-line front end: ``hamlab analyze|simulate|sweep|validate``.

Exit codes: 0 ok, 1 output could not be written, 2 configuration error,
3 policy failure (``--require-stable``), 4 runtime numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .analytics import (
    benchmark_momentum_variance,
    check_stability,
    momentum_variance_ratio,
    profitability,
    stationary_moments,
)
from .errors import (
    InvalidConfigError,
    InvalidParamsError,
    NumericOverflowError,
    PathsOverflowedError,
    ZeroNoiseError,
)
from .experiments import run_sweep, sweep_violations
from .params import INFINITE, validate
from .serialization import (
    ConfigError,
    build_manifest,
    load_config,
    write_manifest,
    write_table,
)
from .simulator import STATISTICS, config_violations, monte_carlo, resolve_config

EXIT_OK, EXIT_WRITE, EXIT_CONFIG, EXIT_POLICY, EXIT_NUMERIC = 0, 1, 2, 3, 4
PATH_COLUMNS = ("t", "f", "u", "m", "s", "log_v_f", "log_v_c")
DEFAULT_OUT = "hamlab-out"
ESTIMATE_COLUMNS = ("statistic", "estimate", "std_error", "analytic_value", "z_score")


def _fmt(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, complex):
        return f"{x.real:.6g}{x.imag:+.6g}i"
    return f"{x:.6g}"


def _print_block(title: str, items: list[tuple[str, object]], stream) -> None:
    print(title, file=stream)
    width = max(len(k) for k, _ in items)
    for k, v in items:
        print(f"  {k:<{width}}  {_fmt(v)}", file=stream)


def _analysis_record(params) -> dict:
    stab = check_stability(params)
    rec: dict = {
        "c1_margin": stab.c1_margin,
        "c2_value": stab.c2_value,
        "eigenvalues": [[e.real, e.imag] for e in stab.eigenvalues],
        "stable_by_conditions": stab.stable_by_conditions,
        "stable_by_spectrum": stab.stable_by_spectrum,
        "var_u": None, "cov_um": None, "var_m": None,
        "variance_ratio": None, "benchmark_var_m": benchmark_momentum_variance(params),
        "c_const": None, "pi_f": None, "pi_c": None, "gap": None,
    }
    if stab.stable:
        mom = stationary_moments(params)
        prof = profitability(params)
        rec.update(var_u=mom.var_u, cov_um=mom.cov_um, var_m=mom.var_m,
                   c_const=prof.c_const, pi_f=prof.pi_f, pi_c=prof.pi_c, gap=prof.gap)
        try:
            rec["variance_ratio"] = momentum_variance_ratio(params)
        except ZeroNoiseError:
            pass
    return rec


def _print_analysis(rec: dict, params, stream) -> None:
    eig = [complex(r, i) for r, i in rec["eigenvalues"]]
    _print_block("stability", [
        ("c1_margin", rec["c1_margin"]),
        ("c2_value", rec["c2_value"]),
        ("eigenvalue_1", eig[0]),
        ("eigenvalue_2", eig[1]),
        ("stable_by_conditions", rec["stable_by_conditions"]),
        ("stable_by_spectrum", rec["stable_by_spectrum"]),
    ], stream)
    if rec["var_u"] is None:
        print("market is unstable: stationary moments and profitability undefined", file=stream)
        return
    if not params.tau_is_infinite:
        print(f"note: closed forms below are for tau = infinite (config tau = {params.tau:g})",
              file=stream)
    _print_block("stationary moments", [
        ("var_u", rec["var_u"]), ("cov_um", rec["cov_um"]), ("var_m", rec["var_m"]),
    ], stream)
    _print_block("momentum variance", [
        ("benchmark_var_m", rec["benchmark_var_m"]), ("variance_ratio", rec["variance_ratio"]),
    ], stream)
    _print_block("profitability", [
        ("c_const", rec["c_const"]), ("pi_f", rec["pi_f"]),
        ("pi_c", rec["pi_c"]), ("gap", rec["gap"]),
    ], stream)


def _out_dir(args) -> Path:
    out = Path(args.out or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    problems = [f"model: {v}" for v in validate(cfg.model)]
    if cfg.sim is not None and not problems:
        problems += [f"sim: {v}" for v in config_violations(cfg.model, cfg.sim)]
    if cfg.has_sweep and not problems:
        problems += sweep_violations(cfg.sweep_spec())
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return EXIT_CONFIG
    print("ok")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    params = cfg.model
    bad = validate(params)
    if not bad.ok:
        raise InvalidParamsError(bad.violations)
    rec = _analysis_record(params)
    if args.format == "json":
        print(json.dumps(rec, indent=2))
    else:
        _print_analysis(rec, params, sys.stdout)
    if args.out:
        out = _out_dir(args)
        rows = []
        for key, val in rec.items():
            if key == "eigenvalues":
                for i, (re, im) in enumerate(val, 1):
                    rows.append((f"eigenvalue_{i}_re", re))
                    rows.append((f"eigenvalue_{i}_im", im))
            elif val is None:
                rows.append((key, math.nan))
            else:
                rows.append((key, val))
        written = write_table(out / "analysis", ("quantity", "value"), rows, args.format)
        write_manifest(out, build_manifest(
            "analyze", params, outputs=[written.name], version=__version__,
        ))
    if args.require_stable and not rec["stable_by_conditions"]:
        print("market is unstable (--require-stable)", file=sys.stderr)
        return EXIT_POLICY
    return EXIT_OK


def _analytic_values(params) -> dict[str, float]:
    if not params.tau_is_infinite or not check_stability(params).stable:
        return {}
    mom = stationary_moments(params)
    prof = profitability(params)
    return {"var_u": mom.var_u, "cov_um": mom.cov_um, "var_m": mom.var_m,
            "mean_u": 0.0, "mean_m": 0.0, "pi_f": prof.pi_f, "pi_c": prof.pi_c}


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if cfg.sim is None:
        raise ConfigError("simulate needs a sim section")
    params, sim = cfg.model, cfg.sim
    if args.tau is not None:
        params = params.replace(tau=INFINITE if args.tau.lower() in ("inf", "infinite") else float(args.tau))
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.paths is not None:
        overrides["n_paths"] = args.paths
    if args.dt is not None:
        overrides["dt"] = args.dt
    sim = resolve_config(params, sim.replace(**overrides))

    est = monte_carlo(params, sim, workers=args.workers, keep_paths=1)
    truth = _analytic_values(params)
    rows = []
    for s in STATISTICS:
        value, se = est.statistic(s)
        ref = truth.get(s, math.nan)
        z = (value - ref) / se if se and math.isfinite(se) and math.isfinite(ref) else math.nan
        rows.append((s, value, se, ref, z))

    out = _out_dir(args)
    path = est.paths[0]
    path_rows = zip(path.t.tolist(), path.f.tolist(), path.u.tolist(), path.m.tolist(),
                    path.s.tolist(), path.log_v_f.tolist(), path.log_v_c.tolist())
    written = [
        write_table(out / "path", PATH_COLUMNS, path_rows, args.format).name,
        write_table(out / "estimates", ESTIMATE_COLUMNS, rows, args.format).name,
    ]
    write_manifest(out, build_manifest(
        "simulate", params, sim=sim, outputs=written, version=__version__,
        extra={"integrator": est.integrator, "workers_independent": True},
    ))

    print(f"integrator: {est.integrator}  paths: {est.n_paths}  "
          f"samples/path: {est.n_samples_per_path}")
    print(f"  {'statistic':<8} {'estimate':>13} {'std_error':>13} {'analytic':>13} {'z':>8}")
    for s, value, se, ref, z in rows:
        print(f"  {s:<8} {_fmt(value):>13} {_fmt(se):>13} {_fmt(ref):>13} {_fmt(z):>8}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    sim = cfg.sim
    if sim is not None and args.seed is not None:
        sim = sim.replace(seed=args.seed)
    spec = cfg.sweep_spec()
    if sim is not cfg.sim:
        spec = type(spec)(base=spec.base, axes=spec.axes, mode=spec.mode, sim=sim)
    result = run_sweep(spec, workers=args.workers)

    out = _out_dir(args)
    axis_names = tuple(a.name for a in spec.axes)
    header = ("point_index", *axis_names, "status", "statistic", "value")
    sweep_file = write_table(out / "sweep", header, result.rows(), args.format)

    frontier_rows = []
    for i, j in result.frontier():
        a, b = result.points[i], result.points[j]
        frontier_rows.append((i, j, *a.coords, *b.coords, a.status, b.status,
                              a.stability.c1_margin, b.stability.c1_margin))
    fheader = ("index_a", "index_b", *(n + "_a" for n in axis_names),
               *(n + "_b" for n in axis_names), "status_a", "status_b",
               "c1_margin_a", "c1_margin_b")
    frontier_file = write_table(out / "frontier", fheader, frontier_rows, args.format)
    write_manifest(out, build_manifest(
        "sweep", spec.base, sim=spec.sim, sweep=spec,
        outputs=[sweep_file.name, frontier_file.name], version=__version__,
    ))

    counts = {s: 0 for s in ("stable", "unstable", "degenerate", "overflowed")}
    for p in result.points:
        counts[p.status] += 1
    print(f"{spec.n_points} grid points: " + ", ".join(f"{v} {k}" for k, v in counts.items()))
    print(f"{len(frontier_rows)} frontier crossings")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="JSON config file")
    common.add_argument("--out", metavar="DIR",
                        help=f"output directory (simulate and sweep default to {DEFAULT_OUT})")
    common.add_argument("--seed", type=int, metavar="N", help="override sim.seed")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="hamlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hamlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="closed-form stability, moments, profitability")
    p.add_argument("--require-stable", action="store_true", help="exit 3 if the market is unstable")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo simulation")
    p.add_argument("--paths", type=int, help="override sim.n_paths")
    p.add_argument("--dt", type=float, help="override sim.dt")
    p.add_argument("--tau", help="override model.tau (number or 'inf')")
    p.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common], help="check a config file")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidParamsError, InvalidConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PathsOverflowedError, NumericOverflowError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"write failure: {exc}", file=sys.stderr)
        return EXIT_WRITE


if __name__ == "__main__":
    sys.exit(main())
