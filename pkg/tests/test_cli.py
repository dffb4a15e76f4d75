import csv
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamlab.cli import main
from hamlab.params import INFINITE, ModelParams
from hamlab.serialization import (
    ConfigError,
    format_number,
    params_from_dict,
    params_to_dict,
    parse_config,
)

MODEL = {
    "mu": 0.05, "sigma_f": [0.2, 0.0], "sigma_n": [0.0, 0.3], "big_z": 0.5,
    "alpha_f": 1.0, "alpha_c": 1.0, "p_f": 0.5, "p_c": 0.5, "beta": 1.0, "k": 0.5,
    "tau": "inf",
}
SIM = {"dt": 0.01, "horizon_t": 100, "burn_in_t": 40, "n_paths": 3, "seed": 1,
       "record_stride": 100}


def _config(tmp_path, name="cfg.json", model=None, sim=None, sweep=None, raw=None):
    path = tmp_path / name
    if raw is not None:
        path.write_text(raw)
        return str(path)
    doc = {"model": {**MODEL, **(model or {})}}
    if sim is not False:
        doc["sim"] = {**SIM, **(sim or {})}
    if sweep is not None:
        doc["sweep"] = sweep
    path.write_text(json.dumps(doc))
    return str(path)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---- analyze -------------------------------------------------------------------

def test_analyze_prints_closed_forms(tmp_path, capsys):
    assert main(["analyze", "--config", _config(tmp_path)]) == 0
    out = capsys.readouterr().out
    for text in ("stable_by_conditions  True", "var_u", "0.22", "0.09", "0.13",
                 "0.04095", "1.44444"):
        assert text in out


def test_analyze_json_record(tmp_path, capsys):
    assert main(["analyze", "--config", _config(tmp_path), "--format", "json"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["var_u"] == pytest.approx(0.22, rel=1e-12)
    assert rec["gap"] == pytest.approx(0.04095, rel=1e-12)
    assert rec["eigenvalues"][0] == pytest.approx([0.25, -math.sqrt(3) / 4])


def test_analyze_writes_table_and_manifest(tmp_path, capsys):
    out = tmp_path / "an"
    assert main(["analyze", "--config", _config(tmp_path), "--out", str(out)]) == 0
    rows = {r["quantity"]: r["value"] for r in _read_csv(out / "analysis.csv")}
    assert float(rows["pi_f"]) == pytest.approx(0.08135, rel=1e-12)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["manifest"]["command"] == "analyze"


def test_analyze_without_out_writes_nothing(tmp_path, monkeypatch, capsys):
    cfg = _config(tmp_path)
    work = tmp_path / "work"
    work.mkdir()
    monkeypatch.chdir(work)
    assert main(["analyze", "--config", cfg]) == 0
    assert list(work.iterdir()) == []


def test_simulate_default_output_directory(tmp_path, monkeypatch, capsys):
    cfg = _config(tmp_path)
    monkeypatch.chdir(tmp_path)
    assert main(["simulate", "--config", cfg]) == 0
    assert (tmp_path / "hamlab-out" / "estimates.csv").exists()


def test_analyze_unstable_market(tmp_path, capsys):
    cfg = _config(tmp_path, model={"alpha_c": 4.0, "k": 1.0})
    assert main(["analyze", "--config", cfg]) == 0
    assert "unstable" in capsys.readouterr().out
    assert main(["analyze", "--config", cfg, "--require-stable"]) == 3


def test_analyze_invalid_population_ratios(tmp_path, capsys):
    cfg = _config(tmp_path, model={"p_f": 0.7, "p_c": 0.5})
    assert main(["analyze", "--config", cfg]) == 2
    assert "population ratios must sum to 1" in capsys.readouterr().err


@pytest.mark.parametrize("raw", [
    '{"model": {}}',
    "{not json",
    json.dumps({"model": {**MODEL, "gamma": 1.0}}),
    json.dumps({"model": MODEL, "extra": {}}),
    json.dumps({"model": {**MODEL, "sigma_f": [0.2]}}),
    json.dumps({"model": {**MODEL, "k": "fast"}}),
    json.dumps({"model": MODEL, "sim": {**SIM, "seed": 1.5}}),
    json.dumps({"model": MODEL, "sweep": {"axes": [{"name": "k"}]}}),
])
def test_malformed_configs_exit_2(tmp_path, raw, capsys):
    assert main(["analyze", "--config", _config(tmp_path, raw=raw)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["analyze", "--config", str(tmp_path / "absent.json")]) == 2
    assert "not found" in capsys.readouterr().err


def test_validate_command(tmp_path, capsys):
    assert main(["validate", "--config", _config(tmp_path)]) == 0
    assert capsys.readouterr().out.strip() == "ok"
    assert main(["validate", "--config", _config(tmp_path, sim={"dt": 0.03})]) == 2
    assert "sim:" in capsys.readouterr().err


# ---- simulate ------------------------------------------------------------------

def test_simulate_outputs_are_reproducible(tmp_path, capsys):
    cfg = _config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(b), "--workers", "2"]) == 0
    for name in ("path.csv", "estimates.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["sim"]["seed"] == 7
    assert manifest["manifest"]["integrator"] == "euler"


def test_simulate_tables(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["simulate", "--config", _config(tmp_path), "--out", str(out)]) == 0
    path = _read_csv(out / "path.csv")
    assert list(path[0]) == ["t", "f", "u", "m", "s", "log_v_f", "log_v_c"]
    assert len(path) == 101
    est = {r["statistic"]: r for r in _read_csv(out / "estimates.csv")}
    assert set(est) == {"var_u", "cov_um", "var_m", "mean_u", "mean_m", "pi_f", "pi_c"}
    assert float(est["var_u"]["analytic_value"]) == pytest.approx(0.22, rel=1e-12)
    assert "var_u" in capsys.readouterr().out


def test_simulate_json_format(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["simulate", "--config", _config(tmp_path), "--out", str(out),
                 "--format", "json"]) == 0
    records = json.loads((out / "estimates.json").read_text())
    assert records[0]["statistic"] == "var_u"


def test_manifest_reruns_identically(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", _config(tmp_path), "--seed", "3", "--paths", "2",
                 "--out", str(a)]) == 0
    assert main(["simulate", "--config", str(a / "manifest.json"), "--out", str(b)]) == 0
    assert (a / "path.csv").read_bytes() == (b / "path.csv").read_bytes()
    assert (a / "estimates.csv").read_bytes() == (b / "estimates.csv").read_bytes()


def test_simulate_with_finite_tau(tmp_path, capsys):
    out = tmp_path / "o"
    cfg = _config(tmp_path, sim={"dt": 0.05})
    assert main(["simulate", "--config", cfg, "--tau", "20", "--dt", "0.05", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["manifest"]["integrator"] == "euler-delay"
    assert manifest["model"]["tau"] == 20.0
    est = {r["statistic"]: r for r in _read_csv(out / "estimates.csv")}
    assert est["var_u"]["analytic_value"] == "nan"


def test_simulate_overflow_exits_4(tmp_path, capsys):
    cfg = _config(tmp_path, model={"alpha_c": 4.0, "k": 1.0},
                  sim={"horizon_t": 1000, "burn_in_t": 10})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 4
    assert "overflow" in capsys.readouterr().err


def test_simulate_needs_sim_section(tmp_path, capsys):
    assert main(["simulate", "--config", _config(tmp_path, sim=False),
                 "--out", str(tmp_path / "o")]) == 2


def test_unwritable_output_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["simulate", "--config", _config(tmp_path), "--out", str(blocker / "x")]) == 1


# ---- sweep ---------------------------------------------------------------------

def _sweep_rows(out):
    return _read_csv(out / "sweep.csv")


def test_sweep_one_axis(tmp_path, capsys):
    out = tmp_path / "o"
    sweep = {"axes": [{"name": "p_f", "min": 0.1, "max": 0.9, "n": 9}]}
    assert main(["sweep", "--config", _config(tmp_path, sweep=sweep), "--out", str(out)]) == 0
    rows = _sweep_rows(out)
    gaps = [r for r in rows if r["statistic"] == "gap"]
    assert len(gaps) == 9
    assert [r["status"] for r in gaps][:2] == ["unstable", "unstable"]
    assert float(gaps[4]["value"]) == pytest.approx(0.04095, rel=1e-12)
    assert "9 grid points" in capsys.readouterr().out


def test_sweep_two_axes(tmp_path, capsys):
    out = tmp_path / "o"
    sweep = {"axes": [{"name": "alpha_c", "min": 0.5, "max": 3.5, "n": 5},
                      {"name": "k", "min": 0.2, "max": 1.0, "n": 5}]}
    assert main(["sweep", "--config", _config(tmp_path, sweep=sweep), "--out", str(out)]) == 0
    rows = [r for r in _sweep_rows(out) if r["statistic"] == "c1_margin"]
    assert len(rows) == 25
    assert {r["point_index"] for r in rows} == {str(i) for i in range(25)}


def test_sweep_frontier_matches_margins(tmp_path, capsys):
    out = tmp_path / "o"
    sweep = {"axes": [{"name": "alpha_c", "min": 1.0, "max": 3.0, "n": 8}]}
    assert main(["sweep", "--config", _config(tmp_path, sweep=sweep), "--out", str(out)]) == 0
    margins = [float(r["value"]) for r in _sweep_rows(out) if r["statistic"] == "c1_margin"]
    statuses = [r["status"] for r in _sweep_rows(out) if r["statistic"] == "c1_margin"]
    assert statuses == ["stable" if m > 0 else "unstable" for m in margins]
    (crossing,) = _read_csv(out / "frontier.csv")
    assert (crossing["index_a"], crossing["index_b"]) == ("3", "4")
    assert float(crossing["c1_margin_a"]) > 0 > float(crossing["c1_margin_b"])


def test_sweep_without_section(tmp_path, capsys):
    assert main(["sweep", "--config", _config(tmp_path), "--out", str(tmp_path / "o")]) == 2


def test_simulated_sweep_is_seed_reproducible(tmp_path, capsys):
    sweep = {"axes": [{"name": "alpha_f", "min": 0.8, "max": 1.2, "n": 3}], "mode": "both"}
    cfg = _config(tmp_path, sweep=sweep, sim={"n_paths": 2})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", cfg, "--seed", "4", "--out", str(a)]) == 0
    assert main(["sweep", "--config", cfg, "--seed", "4", "--out", str(b), "--workers", "3"]) == 0
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    stats = {r["statistic"] for r in _sweep_rows(a)}
    assert {"est_var_u", "se_var_u", "var_u"} <= stats


# ---- serialization -------------------------------------------------------------

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(
    scalars=st.lists(finite, min_size=9, max_size=9),
    vectors=st.lists(finite, min_size=4, max_size=4),
    tau=st.one_of(st.just(INFINITE), st.floats(min_value=1e-6, max_value=1e6)),
)
def test_params_round_trip(scalars, vectors, tau):
    mu, big_z, a_f, a_c, p_f, p_c, beta, k, _ = scalars
    params = ModelParams(mu=mu, sigma_f=vectors[:2], sigma_n=vectors[2:], big_z=big_z,
                         alpha_f=a_f, alpha_c=a_c, p_f=p_f, p_c=p_c, beta=beta, k=k, tau=tau)
    text = json.dumps(params_to_dict(params))
    assert params_from_dict(json.loads(text)) == params


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_number_format_round_trips(x):
    assert float(format_number(x)) == x


def test_tau_spellings():
    for value in ("inf", "Infinite", None):
        assert params_from_dict({**MODEL, "tau": value}).tau_is_infinite
    assert params_from_dict({k: v for k, v in MODEL.items() if k != "tau"}).tau_is_infinite
    assert params_from_dict({**MODEL, "tau": 3}).tau == 3.0


def test_unknown_initial_state_key():
    with pytest.raises(ConfigError):
        parse_config({"model": MODEL, "sim": {**SIM, "initial": {"w": 1.0}}})
