from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from ribbonlim.cli import UsageError, main, parse_config
from ribbonlim.curves import circle, helix, segment, torsion_modulated
from ribbonlim.io import read_curve, write_curve


@pytest.fixture
def curves(tmp_path):
    paths = {}
    for name, curve in [("circle", circle()), ("helix", helix(0.5, 0.5)), ("segment", segment()),
                        ("tm", torsion_modulated())]:
        paths[name] = str(write_curve(tmp_path / f"{name}.json", curve))
    return paths


def run_cli(*args) -> int:
    return main([str(a) for a in args])


def test_parse_eval_flags():
    cfg = parse_config(["eval", "--curve", "helix.json", "--eps", "0.1"])
    assert cfg.command == "eval" and cfg.eps == 0.1 and cfg.curve == "helix.json"
    assert cfg.quad().panels == 16


def test_flags_override_json_config(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"curve": "a.json", "eps": 0.2, "quad-panels": 32}))
    cfg = parse_config(["eval", "--config", str(conf), "--eps", "0.05"])
    assert cfg.eps == 0.05 and cfg.quad_panels == 32 and cfg.curve == "a.json"


def test_toml_config(tmp_path):
    conf = tmp_path / "c.toml"
    conf.write_text('curve = "a.json"\neps_grid = [0.04, 0.02, 0.01, 0.005]\n')
    cfg = parse_config(["gamma-sweep", "--config", str(conf)])
    assert cfg.eps_grid == [0.04, 0.02, 0.01, 0.005]


def test_unknown_config_key_is_named(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"curve": "a.json", "foo": 1}))
    with pytest.raises(UsageError) as info:
        parse_config(["eval", "--config", str(conf)])
    assert info.value.key == "foo"


@pytest.mark.parametrize(
    "argv, key",
    [
        (["eval", "--curve", "a.json", "--eps", "-1"], "eps"),
        (["eval", "--curve", "a.json", "--quad-order", "40"], "quad_order"),
        (["gamma-sweep", "--curve", "a.json", "--eps-grid", "0.01,0.02"], "eps_grid"),
        (["minimize", "--curve", "a.json", "--energy", "regularized"], "kappa_m"),
        (["minimize", "--curve", "a.json", "--energy", "wunderlich"], "eps"),
        (["minimize", "--curve", "a.json", "--barrier-kappa", "1"], "barrier_kappa"),
        (["eval"], "curve"),
    ],
)
def test_out_of_range_and_conflicts(argv, key):
    with pytest.raises(UsageError) as info:
        parse_config(argv)
    assert info.value.key == key


def test_usage_exit_codes(tmp_path):
    assert run_cli("eval", "--curve", "x.json", "--bogus", "1") == 2
    assert run_cli("eval", "--curve", "x.json", "--eps", "-1") == 2
    missing = tmp_path / "nowhere.json"
    assert run_cli("eval", "--curve", missing, "--out", tmp_path / "o") == 2
    payload = json.loads((tmp_path / "o" / "error.json").read_text())
    assert str(missing) in payload["message"]
    assert payload["error_kind"] == "UsageError"


def test_eval_helix_and_echo(curves, tmp_path):
    out = tmp_path / "ev"
    assert run_cli("eval", "--curve", curves["helix"], "--eps", "0.1", "--out", out) == 0
    rep = json.loads((out / "energy.json").read_text())
    assert rep["sadowsky"]["value"] == pytest.approx(4.0, abs=1e-8)
    assert rep["wunderlich"]["quad"] == {"panels": 16, "nodes_per_panel": 16}
    echo = json.loads((out / "run_config.json").read_text())
    assert echo["command"] == "eval" and echo["eps"] == 0.1
    header = (out / "nodes.csv").read_text().splitlines()[0]
    assert header == "t,s,kappa,tau,eta,eta_prime,sadowsky_integrand,wunderlich_integrand"


def test_eval_planar_large_eps(curves, tmp_path):
    assert run_cli("eval", "--curve", curves["circle"], "--eps", "3", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "energy.json").read_text())
    assert rep["wunderlich"]["kind"] == "finite"
    assert rep["wunderlich"]["value"] == pytest.approx(4 * np.pi**2, abs=1e-10)


def test_eval_dimensional_energy(curves, tmp_path):
    args = ["eval", "--curve", curves["circle"], "--eps", "0.05", "--bending-stiffness", "1", "--length", "2"]
    assert run_cli(*args, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "energy.json").read_text())
    assert rep["dimensional_energy"] == pytest.approx(0.05 * 4 * np.pi**2 / 2, rel=1e-12)


def test_eval_blowup_is_reported(curves, tmp_path):
    assert run_cli("eval", "--curve", curves["tm"], "--eps", "0.6", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "energy.json").read_text())
    assert rep["wunderlich"]["kind"] == "infinite"
    assert rep["wunderlich"]["blowup"]["measure_estimate"] > 0


def test_eval_segment_is_domain_error(curves, tmp_path, capsys):
    assert run_cli("eval", "--curve", curves["segment"], "--out", tmp_path) == 1
    payload = json.loads((tmp_path / "error.json").read_text())
    assert payload["error_kind"] == "InflectionPoint"
    assert "t" in payload["location"]
    assert json.loads(capsys.readouterr().err)["error_kind"] == "InflectionPoint"


def test_surface_outputs(curves, tmp_path):
    assert run_cli("surface", "--curve", curves["circle"], "--eps", "0.1", "--n-s", "64", "--out", tmp_path) == 0
    obj = (tmp_path / "ribbon.obj").read_text().splitlines()
    assert sum(line.startswith("v ") for line in obj) == 320
    assert sum(line.startswith("f ") for line in obj) == 512
    assert (tmp_path / "kappa1.csv").read_text().startswith("vertex,kappa1\n")
    rep = json.loads((tmp_path / "surface.json").read_text())
    assert rep["relative_difference"] <= 1e-10


def test_surface_edge_of_regression_exit(curves, tmp_path):
    assert run_cli("surface", "--curve", curves["tm"], "--eps", "0.6", "--out", tmp_path) == 1
    assert json.loads((tmp_path / "error.json").read_text())["error_kind"] == "EdgeOfRegression"


def test_gamma_sweep_helix(curves, tmp_path):
    assert run_cli("gamma-sweep", "--curve", curves["helix"], "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "sweep.json").read_text())
    assert rep["degenerate"] and rep["monotone"] and rep["fitted_rate"] is None
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0] == "eps,kind,value,gap,measure_estimate" and len(rows) == 8
    assert all(abs(float(r.split(",")[3])) <= 1e-10 for r in rows[1:])


def test_gamma_sweep_is_deterministic_across_thread_counts(curves, tmp_path, monkeypatch):
    outputs = []
    for threads in ("1", "3", "1"):
        monkeypatch.setenv("RIBBONLIM_THREADS", threads)
        out = tmp_path / f"run{len(outputs)}"
        assert run_cli("gamma-sweep", "--curve", curves["tm"], "--out", out) == 0
        outputs.append(((out / "sweep.json").read_bytes(), (out / "sweep.csv").read_bytes()))
    assert outputs[0] == outputs[1] == outputs[2]


def test_minimize_outputs(curves, tmp_path):
    assert run_cli("minimize", "--curve", curves["circle"], "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "solve_report.json").read_text())
    assert rep["converged"] and rep["final_energy"]["value"] == pytest.approx(4 * np.pi**2, abs=1e-10)
    assert (tmp_path / "history.csv").read_text().startswith("iteration,objective,grad_norm\n")
    assert read_curve(tmp_path / "minimizer.json").closure


def test_minimize_start_noise_uses_seed(curves, tmp_path):
    args = ["minimize", "--curve", curves["circle"], "--start-noise", "1e-3", "--max-iter", "3"]
    assert run_cli(*args, "--seed", "5", "--out", tmp_path / "a") == 0
    assert run_cli(*args, "--seed", "5", "--out", tmp_path / "b") == 0
    assert run_cli(*args, "--seed", "6", "--out", tmp_path / "c") == 0
    a, b, c = [(tmp_path / d / "minimizer.json").read_bytes() for d in "abc"]
    assert a == b and a != c


def test_minimizer_convergence_command(curves, tmp_path):
    args = ["minimizer-convergence", "--curve", curves["tm"], "--eps-grid", "0.6,0.1", "--max-iter", "2"]
    assert run_cli(*args, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "convergence.json").read_text())
    assert [e["status"] for e in rep["entries"]] == ["blowup_at_start", "ok"]
    assert (tmp_path / "convergence.csv").read_text().startswith("eps,status,energy,gap,distance\n")


def test_lsc_probe_command(curves, tmp_path):
    assert run_cli("lsc-probe", "--curve", curves["circle"], "--count", "4", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "lsc.json").read_text())
    assert rep["passed"] and rep["margin"] >= 0
    assert len((tmp_path / "lsc.csv").read_text().splitlines()) == 5


def test_lsc_probe_inflection_without_floor(tmp_path):
    assert run_cli("make-curve", "--shape", "single_zero", "--out", tmp_path) == 0
    assert run_cli("lsc-probe", "--curve", tmp_path / "curve.json", "--out", tmp_path / "p") == 2
    assert run_cli("lsc-probe", "--curve", tmp_path / "curve.json", "--kappa-m", "0.1", "--count", "4",
                   "--out", tmp_path / "q") == 0


@pytest.mark.parametrize(
    "shape, params",
    [
        ("circle", []),
        ("ellipse", ["axis_ratio=1.3"]),
        ("helix", ["radius=0.4", "pitch=0.2"]),
        ("torsion_modulated", ["mode=3", "height=0.01"]),
        ("random_closed", []),
        ("mobius_like", []),
    ],
)
def test_make_curve_shapes(tmp_path, shape, params):
    args = ["make-curve", "--shape", shape, "--out", tmp_path]
    for p in params:
        args += ["--param", p]
    assert run_cli(*args) == 0
    curve = read_curve(tmp_path / "curve.json")
    assert curve.target_length == 1.0


def test_make_curve_bad_params(tmp_path):
    assert run_cli("make-curve", "--shape", "circle", "--param", "radius=2", "--out", tmp_path) == 2
    assert run_cli("make-curve", "--shape", "circle", "--param", "radius", "--out", tmp_path) == 2
    assert run_cli("make-curve", "--shape", "square", "--out", tmp_path) == 2


def test_module_entry_point(curves, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "ribbonlim", "eval", "--curve", curves["segment"], "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 1
    assert json.loads(proc.stderr)["error_kind"] == "InflectionPoint"
