import csv
import json
from pathlib import Path

import numpy as np
import pytest

from esoreg.cli import dump_json, main
from esoreg.errors import ConfigurationError
from esoreg.scenario import bundled_path, bundled_scenarios, parse_scenario

DATA = Path(__file__).parent / "data"

SHORT = """
[model]
name = example
rho = 0.2
[sim]
t_final = {t_final}
exo_warmup = 5
"""


def write(tmp_path, text, name="s.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_bundled_scenarios_present():
    assert set(bundled_scenarios()) >= {"example_rho02", "example_rho_neg02", "example_unstable_gains"}
    for name in bundled_scenarios():
        parse_scenario(bundled_path(name).read_text(), name)


def test_scenario_parsing_auto_and_explicit():
    s = parse_scenario(bundled_path("example_rho02").read_text())
    assert s.G is None and s.sat_levels is None and s.dz is None and s.dt is None
    s = parse_scenario("[model]\nname = example\nrho = -0.1\n[gains]\nG = 6, 11\ng_last = 6\n"
                       "dz = 9000, 0.2, 0.05\n[sim]\ndt = 5e-5\n")
    assert s.G == (6.0, 11.0) and s.g_last == 6.0 and s.dz[0].c == 9000.0 and s.dt == 5e-5


@pytest.mark.parametrize("text,match", [
    ("[model]\nrho = 0.2\n", "name is required"),
    ("[model]\nname = nope\n", "unknown model"),
    ("[model]\nname = example\n[extra]\na = 1\n", "unknown section"),
    ("[model]\nname = example\nspeed = 1\n", "unknown key"),
    ("[model]\nname = example\nrho = abc\n", "numbers"),
    ("[model\nname = example\n", "malformed"),
    ("[model]\nname = example\n[gains]\ndz = 1, 2\n", "dz group"),
    ("[model]\nname = example\n[sim]\ndt = -1\n", "dt"),
])
def test_scenario_errors(text, match):
    with pytest.raises(ConfigurationError, match=match):
        parse_scenario(text)


def test_run_headline(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "example_rho02", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    rep = summary["report"]
    assert rep["final_output_error"] < 1e-2 and rep["final_param_error"] < 5e-2
    assert summary["theta_hat_final"][0] == pytest.approx(0.2, abs=5e-2)
    assert summary["resolved"]["gains"]["dz"][0]["c"] > summary["resolved"]["slope_lower_bound"][0]
    assert summary["resolved"]["sim"]["dt_source"] == "auto"
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    assert ",".join(rows[0]) == (DATA / "example_header.csv").read_text().strip()
    assert len(rows) - 1 == summary["rows"]
    assert not list(out.glob(".*.tmp"))


def test_summary_roundtrip(tmp_path):
    out = tmp_path / "run"
    assert main(["run", write(tmp_path, SHORT.format(t_final=1)), "--out", str(out)]) == 0
    text = (out / "summary.json").read_text()
    assert json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n" == text
    assert dump_json(json.loads(text)) == text


def test_csv_values_roundtrip(tmp_path):
    out = tmp_path / "run"
    assert main(["run", write(tmp_path, SHORT.format(t_final=0.5)), "--out", str(out), "--dt", "1e-4"]) == 0
    table = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    assert table.shape[1] == 14 and table[-1, 0] == pytest.approx(0.5)


def test_run_t_final_zero(tmp_path):
    out = tmp_path / "zero"
    assert main(["run", write(tmp_path, SHORT.format(t_final=1)), "--out", str(out), "--t-final", "0"]) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert len(lines) == 2
    assert json.loads((out / "summary.json").read_text())["report"]["output_settle_time"] is None


def test_run_rejects_unstable_gains(tmp_path, capsys):
    assert main(["run", "example_unstable_gains", "--out", str(tmp_path / "u")]) == 2
    assert "not Hurwitz" in capsys.readouterr().err


def test_run_divergence_exit_code(tmp_path, capsys):
    text = bundled_path("example_unstable_gains").read_text().replace("[gains]", "[gains]\nallow_unsafe = true")
    out = tmp_path / "div"
    assert main(["run", write(tmp_path, text), "--out", str(out)]) == 3
    assert "diverged" in capsys.readouterr().err
    assert json.loads((out / "summary.json").read_text())["report"]["diverged"] is True


def test_config_error_exit_codes(tmp_path, capsys):
    assert main(["run", write(tmp_path, "[model]\nname = nope\n"), "--out", str(tmp_path / "x")]) == 2
    assert "unknown model" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "x")]) == 2
    assert main(["check", write(tmp_path, "[model]\nrho = 0.2\n")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 2


def test_check_example(capsys):
    assert main(["check", "example_rho02"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert len(lines) == 5 and all(l.startswith("PASS") for l in lines)


def test_check_b0_failure(tmp_path, capsys):
    path = write(tmp_path, "[model]\nname = example\nrho = 0.2\nb0 = 2\n")
    assert main(["check", path]) == 1
    assert "FAIL b_lower_bound" in capsys.readouterr().out


def test_sweep_rho(tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "example_rho02", "--param", "rho", "--values=-0.2,0,0.2", "--out", str(out),
                 "--seedless"]) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["rho"]) for r in rows] == [-0.2, 0.0, 0.2]
    assert all(float(r["final_output_error"]) < 1e-2 and r["output_converged"] == "True" for r in rows)


def test_sweep_kappa_records_settle_times(tmp_path, capsys):
    out = tmp_path / "sk"
    assert main(["sweep", "example_rho02", "--param", "kappa", "--values", "5,30,100", "--out", str(out)]) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    settle = {float(r["kappa"]): r["output_settle_time"] for r in rows}
    print("settle times by kappa:", settle)
    assert settle[30.0] and settle[100.0]


def test_sweep_errors(tmp_path):
    assert main(["sweep", "example_rho02", "--param", "mass", "--values", "1", "--out", str(tmp_path)]) == 2
    assert main(["sweep", "example_rho02", "--param", "kappa", "--values", "", "--out", str(tmp_path)]) == 2
    assert not (tmp_path / "sweep.csv").exists()
