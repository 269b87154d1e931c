"""Serialisation, sweeps, figure recipes and the command line."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from dualjc import recipes
from dualjc.cli import main
from dualjc.errors import ConfigError, UnknownFigureError
from dualjc.serialize import fmt, read_csv, read_density, write_csv, write_density
from dualjc.sweep import apply_overrides, env_overrides, parse_sweep, run_sweep, write_sweep

MODEL = "[model]\ndelta = 2\nsagnac = 1\ndelta_q = 1e4\nkappa = 0.1\n"


def sweep_file(tmp_path, name, task="critical", axes="[axis:lambda]\nmin = 0.8\nmax = 1.6\ncount = 5\n",
               extra="", workers=1):
    path = tmp_path / f"{name}.ini"
    path.write_text(f"[sweep]\ntask = {task}\noutput = {tmp_path / name}\nworkers = {workers}\n\n"
                    f"{axes}\n{MODEL}{extra}")
    return path


# serialisation ---------------------------------------------------------------------

@pytest.mark.parametrize("value,text", [
    (None, ""), (True, "true"), (3, "3"), (0.1 + 0.2, "0.3"), (math.nan, "nan"),
    (-math.inf, "-inf"), (1 / 3, "0.333333333333"), (np.float32(0.5), "0.5"),
])
def test_fmt(value, text):
    assert fmt(value) == text


def test_csv_and_density_roundtrip(tmp_path):
    path = write_csv(tmp_path / "sub" / "t.csv", ("a", "b"), [(1, 2.5), ("x", None)])
    assert path.read_bytes() == b"a,b\n1,2.5\nx,\n"
    header, rows = read_csv(path)
    assert header == ["a", "b"] and rows == [["1", "2.5"], ["x", ""]]
    rho = np.array([[0.75, 0.1 - 0.2j], [0.1 + 0.2j, 0.25]])
    assert np.array_equal(read_density(write_density(tmp_path / "rho.csv", rho)), rho)


# sweeps ----------------------------------------------------------------------------

def test_sweep_cells_are_row_major(tmp_path):
    from dualjc.model import read_config

    cfg = read_config(sweep_file(tmp_path, "grid", axes="[axis:lambda]\nmin = 1\nmax = 2\ncount = 2\n\n"
                                 "[axis:G_over_kappa]\nmin = 0.5\nmax = 1.5\ncount = 3\n"))
    cells = parse_sweep(cfg).cells()
    assert [(c["lambda"], c["G_over_kappa"]) for c in cells][:4] == [
        ("1.0", "0.5"), ("1.0", "1.0"), ("1.0", "1.5"), ("2.0", "0.5")]


def test_sweep_output_independent_of_workers(tmp_path):
    outputs = []
    for workers in (1, 3):
        name = f"w{workers}"
        path = sweep_file(tmp_path, name, task="fluctuations", workers=workers,
                          axes="[axis:lambda]\nmin = 0.4\nmax = 2.4\ncount = 6\n\n"
                               "[axis:G_over_kappa]\nmin = 0.5\nmax = 3\ncount = 4\n")
        assert main(["sweep", str(path)]) == 0
        outputs.append((tmp_path / f"{name}.csv").read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[0].count(b"\n") == 25


def test_sweep_isolates_failing_cells(tmp_path, capsys):
    path = sweep_file(tmp_path, "bad", task="meanfield",
                      axes="[axis:sagnac]\nmin = 0\nmax = 3\ncount = 4\n", extra="lambda = 1.5\nG_over_kappa = 3\n")
    assert main(["sweep", str(path)]) == 2
    header, rows = read_csv(tmp_path / "bad.csv")
    assert header[-1] == "error"
    assert [r[-1] == "" for r in rows] == [True, True, False, False]
    assert rows[-1][1] == ""
    manifest = json.loads((tmp_path / "bad.json").read_text())
    assert [e["cell"] for e in manifest["errors"]] == [2, 3]
    assert manifest["cells"] == 4 and manifest["task"] == "meanfield"
    assert "wall_clock_s" in manifest and manifest["outputs"] == [str(tmp_path / "bad.csv")]


def test_single_point_sweep(tmp_path):
    path = sweep_file(tmp_path, "one", axes="[axis:lambda]\nmin = 1.36\ncount = 1\n")
    assert main(["sweep", str(path)]) == 0
    header, rows = read_csv(tmp_path / "one.csv")
    assert len(rows) == 1
    assert float(rows[0][header.index("g_c2_over_kappa")]) == pytest.approx(2.7844, abs=1e-4)


def test_sagnac_sweep(tmp_path):
    path = tmp_path / "lab.ini"
    path.write_text(f"[sweep]\ntask = sagnac\noutput = {tmp_path / 'lab'}\nworkers = 1\n\n"
                    "[axis:angular_velocity]\nmin = 0\nmax = 6600\ncount = 3\n\n[physical]\n"
                    "refractive_index = 1.4\nradius = 1.1e-3\nvacuum_wavelength = 1550e-9\n"
                    "quality_factor = 6e9\n")
    assert main(["sweep", str(path)]) == 0
    _, rows = read_csv(tmp_path / "lab.csv")
    assert float(rows[0][1]) == 0.0
    assert float(rows[2][1]) == pytest.approx(2 * float(rows[1][1]))


@pytest.mark.parametrize("config", [
    {"sweep": {"task": "dance"}},
    {"sweep": {"task": "critical"}, "model": {}},
    {"sweep": {"task": "critical"}, "axis:colour": {"min": "1"}},
    {"sweep": {"task": "critical"}, "axis:lambda": {"max": "1"}},
    {"sweep": {"task": "critical"}, "axis:lambda": {"min": "1", "count": "0"}},
    {"sweep": {"task": "critical"}, "axis:lambda": {"min": "0", "max": "1", "scale": "log"}},
    {"sweep": {"task": "critical"}, "axis:lambda": {"min": "1"}, "options": {"speed": "1"}},
    {"sweep": {"task": "critical"}, "axis:lambda": {"min": "1"}, "extra": {}},
    {"sweep": {"task": "critical", "workers": "many"}, "axis:lambda": {"min": "1"}},
])
def test_bad_sweep_configs(config):
    with pytest.raises(ConfigError):
        parse_sweep(config)


def test_override_layers():
    env = env_overrides({"DUALJC_KAPPA": "0.2", "DUALJC_n_a": "8", "HOME": "/root"})
    assert env == {"kappa": "0.2", "n_a": "8"}
    with pytest.raises(ConfigError):
        env_overrides({"DUALJC_COLOUR": "red"})
    merged = apply_overrides({"model": {"kappa": "0.1"}}, env, {"kappa": "0.3", "axis:lambda.max": "2"})
    assert merged["model"]["kappa"] == "0.3"
    assert merged["options"] == {"n_a": "8"}
    assert merged["axis:lambda"] == {"max": "2"}


def test_run_sweep_log_axis():
    spec = parse_sweep({"sweep": {"task": "critical", "workers": "1"},
                        "axis:kappa": {"min": "0.01", "max": "1", "count": "3", "scale": "log"},
                        "model": {"delta": "2", "sagnac": "0", "delta_q": "1e4", "lambda": "1"}})
    result = run_sweep(spec)
    assert [r[0] for r in result.rows] == pytest.approx([0.01, 0.1, 1.0])
    assert result.exit_code == 0


# command line ---------------------------------------------------------------------

def test_critical_values(capsys):
    assert main(["critical", "--sagnac", "1", "--over-kappa"]) == 0
    assert capsys.readouterr().out.strip() == "1.96140521185"
    assert main(["critical", "--sagnac", "1", "--direction", "backward", "--over-kappa"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.6652, abs=1e-4)
    assert main(["critical", "--sagnac", "1", "--lambda", "1.36", "--order", "second",
                 "--method", "numeric", "--over-kappa"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(2.7844, abs=1e-4)


def test_orders_coincide_at_tricritical_coupling(capsys):
    main(["critical", "--order", "tricritical"])
    lam = capsys.readouterr().out.strip()
    main(["critical", "--lambda", lam, "--order", "first"])
    first = float(capsys.readouterr().out)
    main(["critical", "--lambda", lam, "--order", "second"])
    assert float(capsys.readouterr().out) == pytest.approx(first, rel=1e-9)


def test_sagnac_command(capsys):
    assert main(["sagnac", "--refractive-index", "1.4", "--radius", "1.1e-3",
                 "--angular-velocity", "6.6e3", "--vacuum-wavelength", "1550e-9",
                 "--quality-factor", "6e9"]) == 0
    out = dict(line.split("=") for line in capsys.readouterr().out.split())
    assert float(out["sagnac_shift_hz"]) == pytest.approx(3.2e6, rel=0.02)
    assert float(out["intrinsic_loss_hz"]) == pytest.approx(32e3, rel=0.02)


def test_config_env_and_flag_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "m.ini"
    cfg.write_text("[model]\nsagnac = -1\nlambda = 1.5\n")
    main(["critical", "--config", str(cfg), "--over-kappa"])
    from_config = float(capsys.readouterr().out)
    assert from_config == pytest.approx(0.6652, abs=1e-4)
    monkeypatch.setenv("DUALJC_SAGNAC", "1")
    main(["critical", "--config", str(cfg), "--over-kappa"])
    assert float(capsys.readouterr().out) == pytest.approx(1.9614, abs=1e-4)
    main(["critical", "--config", str(cfg), "--sagnac", "0", "--over-kappa"])
    assert float(capsys.readouterr().out) == pytest.approx(0.9951, abs=1e-4)


def test_tables(capsys):
    assert main(["meanfield", "--sagnac", "1", "--G-over-kappa", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("branch,phase") and len(lines) == 4
    assert main(["stability", "--sagnac", "1", "--G-over-kappa", "3"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "stable_count=3"
    assert main(["fluctuations", "--sagnac", "1", "--lambda", "1.42", "--G-over-kappa", "2.6"]) == 0
    assert "regime=II1" in capsys.readouterr().out.split()


def test_lindblad_command(tmp_path, capsys):
    args = ["lindblad", "--delta-q", "5", "--kappa", "0.5", "--gamma", "0.5", "--lambda", "1",
            "--pump-strength", "0.2", "--n-a", "9", "--n-b", "6", "--json", str(tmp_path / "o.json"),
            "--density", str(tmp_path / "rho.csv"), "--wigner", str(tmp_path / "w.csv")]
    assert main(args) == 0
    out = dict(line.split("=") for line in capsys.readouterr().out.split())
    assert {"n_a", "n_b", "sigma_z", "parity", "s_x"} <= set(out)
    payload = json.loads((tmp_path / "o.json").read_text())
    assert payload["diagnostics"]["method"] == "iterative"
    assert read_density(tmp_path / "rho.csv").shape == (108, 108)
    header, rows = read_csv(tmp_path / "w.csv")
    assert header == ["x", "p", "W"] and len(rows) == 201 * 201


@pytest.mark.parametrize("argv", [
    ["critical", "--kappa", "fast"],
    ["critical", "--sagnac", "5"],
    ["critical", "--config", "/nonexistent/file.ini"],
    ["reproduce", "fig99"],
    ["sweep", "/nonexistent/sweep.ini"],
    ["sagnac", "--radius", "1"],
])
def test_bad_input_exits_one(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_numerical_failure_exits_two(capsys):
    # No first-order transition without loss in the pumped mode's window.
    assert main(["lindblad", "--lambda", "0", "--gamma", "0", "--n-a", "3", "--n-b", "3"]) == 2
    assert "NonUniqueSteadyStateError" in capsys.readouterr().err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "dualjc", "critical", "--order", "tricritical",
                          "--method", "approx"], capture_output=True, text=True, check=True)
    assert float(out.stdout) == pytest.approx(math.sqrt(2), abs=1e-11)


# figure recipes --------------------------------------------------------------------

def test_unknown_figure():
    with pytest.raises(UnknownFigureError):
        recipes.reproduce("fig0", "nowhere")


def test_fig2_critical_pumps(tmp_path):
    recipes.reproduce("fig2", tmp_path)
    _, rows = read_csv(tmp_path / "fig2_critical.csv")
    got = {(r[0], r[2]): float(r[3]) for r in rows}
    assert got[("forward", "first")] == pytest.approx(1.9614, abs=1e-4)
    assert got[("backward", "first")] == pytest.approx(0.6652, abs=1e-4)
    assert got[("forward", "second")] == pytest.approx(2.7844, abs=1e-4)
    assert got[("backward", "second")] == pytest.approx(0.9422, abs=1e-4)
    manifest = json.loads((tmp_path / "fig2_manifest.json").read_text())
    assert manifest["cells"] == 5 and manifest["config"]["figure"] == "fig2"


def test_fig1_is_reciprocal_without_rotation(tmp_path):
    recipes.reproduce("fig1", tmp_path, {"sagnac": "0"})
    for kind in ("boundaries", "map"):
        fwd = (tmp_path / f"fig1_forward_{kind}.csv").read_bytes()
        assert fwd == (tmp_path / f"fig1_backward_{kind}.csv").read_bytes()


def test_figS2_matches_library(tmp_path):
    from dualjc import criticality
    from dualjc.model import ModelParams

    recipes.reproduce("figS2", tmp_path)
    header, rows = read_csv(tmp_path / "figS2.csv")
    assert len(rows) == 39
    for row in rows[::10]:
        ratio = float(row[0])
        p = ModelParams.from_lambdas(delta=2, sagnac=2 * ratio, delta_q=1e4, kappa=0.1, lambda_a=1)
        assert float(row[3]) == pytest.approx(criticality.lambda_tricritical(p) - math.sqrt(2),
                                              abs=1e-11)


def test_recipe_outputs_are_deterministic(tmp_path):
    recipes.reproduce("figS2", tmp_path / "one")
    recipes.reproduce("figS2", tmp_path / "two")
    assert (tmp_path / "one" / "figS2.csv").read_bytes() == (tmp_path / "two" / "figS2.csv").read_bytes()


def test_write_sweep_paths(tmp_path):
    spec = parse_sweep({"sweep": {"task": "critical", "workers": "1", "output": str(tmp_path / "x")},
                        "axis:lambda": {"min": "1"},
                        "model": {"delta": "2", "sagnac": "0", "delta_q": "1e4", "kappa": "0.1"}})
    csv_path, json_path = write_sweep(spec, run_sweep(spec), {"note": "t"})
    assert csv_path.suffix == ".csv" and json_path.suffix == ".json"
