"""JSON configuration, CSV/JSON tables and run manifests.

A configuration is one JSON object with sections ``model``, ``sim`` and
``sweep`` (the latter two optional). Unknown keys anywhere are errors. A run
manifest is a resolved configuration plus a ``manifest`` section of metadata,
so it can be passed back as ``--config`` to reproduce the run.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import HamlabError
from .experiments import SweepAxis, SweepSpec
from .params import INFINITE, ModelParams
from .simulator import InitialState, SimConfig

TOP_KEYS = ("model", "sim", "sweep", "manifest")
MODEL_REQUIRED = (
    "mu", "sigma_f", "sigma_n", "big_z", "alpha_f", "alpha_c",
    "p_f", "p_c", "beta", "k",
)
MODEL_OPTIONAL = ("tau",)
SIM_REQUIRED = ("dt", "horizon_t")
SIM_OPTIONAL = (
    "burn_in_t", "n_paths", "seed", "record_stride", "initial", "scheme",
    "burn_in_profitability",
)
SWEEP_KEYS = ("axes", "mode")
AXIS_KEYS = ("name", "min", "max", "n")


class ConfigError(HamlabError, ValueError):
    """The configuration file is unreadable, malformed or has unknown keys."""


def _check_keys(section: str, obj: Any, required: Sequence[str], optional: Sequence[str] = ()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{section}: expected an object")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(map(repr, unknown))}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ConfigError(f"{section}: missing key(s) {', '.join(map(repr, missing))}")


def _number(section: str, key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}")
    return float(value)


def _integer(section: str, key: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{section}.{key}: expected an integer, got {value!r}")
    return value


def _tau(value: Any) -> float:
    if value is None or (isinstance(value, str) and value.lower() in ("inf", "infinite")):
        return INFINITE
    return _number("model", "tau", value)


def params_from_dict(obj: Any) -> ModelParams:
    _check_keys("model", obj, MODEL_REQUIRED, MODEL_OPTIONAL)
    kwargs: dict[str, Any] = {}
    for key in MODEL_REQUIRED:
        if key in ("sigma_f", "sigma_n"):
            vec = obj[key]
            if not isinstance(vec, list) or len(vec) != 2:
                raise ConfigError(f"model.{key}: expected a list of two numbers")
            kwargs[key] = tuple(_number("model", key, x) for x in vec)
        else:
            kwargs[key] = _number("model", key, obj[key])
    kwargs["tau"] = _tau(obj.get("tau"))
    return ModelParams(**kwargs)


def params_to_dict(params: ModelParams) -> dict[str, Any]:
    d = asdict(params)
    d["sigma_f"] = list(params.sigma_f)
    d["sigma_n"] = list(params.sigma_n)
    d["tau"] = "inf" if params.tau_is_infinite else params.tau
    return d


def sim_from_dict(obj: Any) -> SimConfig:
    _check_keys("sim", obj, SIM_REQUIRED, SIM_OPTIONAL)
    kwargs: dict[str, Any] = {
        "dt": _number("sim", "dt", obj["dt"]),
        "horizon_t": _number("sim", "horizon_t", obj["horizon_t"]),
    }
    if obj.get("burn_in_t") is not None:
        kwargs["burn_in_t"] = _number("sim", "burn_in_t", obj["burn_in_t"])
    for key in ("n_paths", "seed", "record_stride"):
        if key in obj:
            kwargs[key] = _integer("sim", key, obj[key])
    if "scheme" in obj:
        if not isinstance(obj["scheme"], str):
            raise ConfigError("sim.scheme: expected a string")
        kwargs["scheme"] = obj["scheme"]
    if "burn_in_profitability" in obj:
        if not isinstance(obj["burn_in_profitability"], bool):
            raise ConfigError("sim.burn_in_profitability: expected true or false")
        kwargs["burn_in_profitability"] = obj["burn_in_profitability"]
    if "initial" in obj:
        names = [f.name for f in fields(InitialState)]
        _check_keys("sim.initial", obj["initial"], (), names)
        kwargs["initial"] = InitialState(
            **{k: _number("sim.initial", k, v) for k, v in obj["initial"].items()}
        )
    return SimConfig(**kwargs)


def sim_to_dict(config: SimConfig) -> dict[str, Any]:
    d = asdict(config)
    d["initial"] = asdict(config.initial)
    return d


def sweep_from_dict(obj: Any, base: ModelParams, sim: SimConfig | None) -> SweepSpec:
    _check_keys("sweep", obj, ("axes",), ("mode",))
    axes_obj = obj["axes"]
    if not isinstance(axes_obj, list):
        raise ConfigError("sweep.axes: expected a list")
    axes = []
    for i, a in enumerate(axes_obj):
        sec = f"sweep.axes[{i}]"
        _check_keys(sec, a, AXIS_KEYS)
        if not isinstance(a["name"], str):
            raise ConfigError(f"{sec}.name: expected a string")
        axes.append(SweepAxis(
            a["name"], _number(sec, "min", a["min"]), _number(sec, "max", a["max"]),
            _integer(sec, "n", a["n"]),
        ))
    mode = obj.get("mode", "analytic")
    if not isinstance(mode, str):
        raise ConfigError("sweep.mode: expected a string")
    return SweepSpec(base=base, axes=tuple(axes), mode=mode, sim=sim)


def sweep_to_dict(spec: SweepSpec) -> dict[str, Any]:
    return {
        "axes": [{"name": a.name, "min": a.lo, "max": a.hi, "n": a.n} for a in spec.axes],
        "mode": spec.mode,
    }


class RunConfig:
    """Parsed configuration document."""

    def __init__(self, model: ModelParams, sim: SimConfig | None, sweep: dict | None):
        self.model = model
        self.sim = sim
        self._sweep = sweep

    def sweep_spec(self) -> SweepSpec:
        if self._sweep is None:
            raise ConfigError("configuration has no sweep section")
        return sweep_from_dict(self._sweep, self.model, self.sim)

    @property
    def has_sweep(self) -> bool:
        return self._sweep is not None


def parse_config(doc: Any) -> RunConfig:
    _check_keys("config", doc, ("model",), ("sim", "sweep", "manifest"))
    model = params_from_dict(doc["model"])
    sim = sim_from_dict(doc["sim"]) if doc.get("sim") is not None else None
    sweep = doc.get("sweep")
    cfg = RunConfig(model, sim, sweep)
    if sweep is not None:
        cfg.sweep_spec()  # surface structural errors early
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return parse_config(doc)


def format_number(x: Any) -> str:
    """Round-trip text for a CSV cell: 17 significant digits for floats."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]], fmt: str) -> Path:
    """Write ``rows`` as CSV or as a JSON list of records; returns the file written."""
    if fmt == "json":
        path = path.with_suffix(".json")
        records = [
            {h: (None if isinstance(v, float) and math.isnan(v) else v) for h, v in zip(header, r)}
            for r in rows
        ]
        path.write_text(json.dumps(records, indent=1) + "\n")
        return path
    path = path.with_suffix(".csv")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([format_number(v) for v in r])
    return path


def build_manifest(
    command: str,
    params: ModelParams,
    *,
    sim: SimConfig | None = None,
    sweep: SweepSpec | None = None,
    outputs: Sequence[str] = (),
    extra: dict[str, Any] | None = None,
    version: str,
) -> dict[str, Any]:
    doc: dict[str, Any] = {"model": params_to_dict(params)}
    if sim is not None:
        doc["sim"] = sim_to_dict(sim)
    if sweep is not None:
        doc["sweep"] = sweep_to_dict(sweep)
    meta = {
        "tool": "hamlab",
        "version": version,
        "command": command,
        "seed": sim.seed if sim is not None else None,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs": list(outputs),
    }
    meta.update(extra or {})
    doc["manifest"] = meta
    return doc


def write_manifest(out_dir: Path, manifest: dict[str, Any]) -> Path:
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path
