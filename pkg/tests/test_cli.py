import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fbmcurrent import cli, current
from fbmcurrent.errors import ConvergenceError
from fbmcurrent.reports import read_csv, write_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _run(sub, cfg, out, *extra):
    return cli.run([sub, "--config", str(cfg), "--out", str(out), *extra])


def test_membership_run_writes_schema_csv_and_manifest(tmp_path):
    cfg = _write(tmp_path, "[membership]\nH = 0.4, 0.6\nd = 2\nx = 0, 1\nN = none, 1\n")
    assert _run("membership", cfg, tmp_path / "o") == 0
    first = (tmp_path / "o" / "membership.csv").read_text().splitlines()[0]
    assert first == "# schema=1"
    cols, rows = read_csv(tmp_path / "o" / "membership.csv")
    assert cols[:4] == ["H", "d", "x", "N"] and len(rows) == 8
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["status"] == "ok" and "membership.csv" in man["files"]
    assert set(man["versions"]) >= {"python", "numpy", "scipy"}


def test_bad_h_exits_2_with_message(tmp_path, capsys):
    cfg = _write(tmp_path, "[membership]\nH = 1.2\nd = 1\nx = 0\n")
    assert _run("membership", cfg, tmp_path / "o") == 2
    assert "H out of (0,1): got 1.2" in capsys.readouterr().err


@pytest.mark.parametrize("text,fragment", [
    ("[membership]\nH = 0.3\nd = 1\nx = 0\nbogus = 1\n", "unknown key"),
    ("[membership]\nH = 0.3\nd = 1\nx = 0\n[extra]\na = 1\n", "unknown section"),
    ("[run]\nseed = 1\n", "no [membership] section"),
    ("[stransform]\nH = 0.3\n", "unknown section"),
    ("[membership]\nH = 0.3, \nd = 1\nx = 0\n", "empty entry"),
    ("[membership]\nH = abc\nd = 1\nx = 0\n", "not a number"),
    ("[membership]\nH = 0.3\nd = 1\nx = 0\n[run]\nseed = -4\n", "seed"),
])
def test_config_errors_exit_2(tmp_path, capsys, text, fragment):
    assert _run("membership", _write(tmp_path, text), tmp_path / "o") == 2
    assert fragment in capsys.readouterr().err


def test_missing_config_and_unknown_subcommand(tmp_path):
    assert _run("membership", tmp_path / "nope.ini", tmp_path / "o") == 2
    assert cli.run(["frobnicate", "--config", "x"]) == 2


def test_non_member_current_names_the_rule(tmp_path, capsys):
    cfg = _write(tmp_path, "[current]\nH = 0.7\nT = 1\nx = 0.8\nz = 1\nphi = 0.2*h0\n")
    assert _run("current", cfg, tmp_path / "o") == 2
    assert "outside_scope" in capsys.readouterr().err


def test_convergence_failure_exits_3_and_flags_rows(tmp_path, monkeypatch):
    def broken(spec, z, phi, return_error=False):
        raise ConvergenceError("budget exhausted", partial=np.array([0.25 + 0j]), error=np.array([1e-3]))

    monkeypatch.setattr(current, "s_current", broken)
    cfg = _write(tmp_path, "[current]\nH = 0.3\nT = 1\nx = 0.8\nz = 1\nphi = 0.2*h0\n")
    assert _run("current", cfg, tmp_path / "o") == 3
    cols, rows = read_csv(tmp_path / "o" / "current.csv")
    assert rows[0][cols.index("status")] == "convergence_failure"
    assert float(rows[0][cols.index("value_re")]) == 0.25
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["status"] == "convergence_failure" and man["flags"]


def test_phi_parsing_and_dimension_from_phi(tmp_path):
    cfg = _write(tmp_path, "[current]\nH = 0.3\nT = 1\nx = 0\nz = 1\nphi = 0.2*h0 | 0.1*h1 0.05*h0\n")
    assert _run("current", cfg, tmp_path / "o") == 0
    cols, rows = read_csv(tmp_path / "o" / "current.csv")
    assert rows[0][cols.index("x")] == "0.0 0.0"
    assert rows[0][cols.index("rule")] == "cor_small_Hd"


def test_bad_phi_term(tmp_path, capsys):
    cfg = _write(tmp_path, "[current]\nH = 0.3\nT = 1\nx = 0.5\nz = 1\nphi = 0.2*q0\n")
    assert _run("current", cfg, tmp_path / "o") == 2
    assert "c*hk" in capsys.readouterr().err


def test_rows_sorted_by_keys(tmp_path):
    write_csv(tmp_path / "s.csv", ["a", "b"], [[2.0, "x"], [1.0, "y"], [1.0, "a"]], ["a", "b"])
    _, rows = read_csv(tmp_path / "s.csv")
    assert rows == [["1.0", "a"], ["1.0", "y"], ["2.0", "x"]]


def test_seed_override_changes_random_outputs(tmp_path):
    cfg = _write(tmp_path, "[fbm-sample]\nH = 0.4\nT = 1\nn_steps = 5\nn_paths = 3\nwrite_paths = true\n")
    assert _run("fbm-sample", cfg, tmp_path / "a", "--seed", "1") == 0
    assert _run("fbm-sample", cfg, tmp_path / "b", "--seed", "2") == 0
    assert _run("fbm-sample", cfg, tmp_path / "c", "--seed", "1") == 0
    a, b, c = ((tmp_path / k / "fbm_paths_H0.4.csv").read_bytes() for k in "abc")
    assert a == c and a != b


@pytest.mark.parametrize("cfg", sorted(p.name for p in CONFIGS.glob("*.ini")))
def test_shipped_configs_run(tmp_path, cfg):
    sub = cfg.split("_")[0].split(".")[0]
    if sub == "chaos-truncated":
        sub = "chaos-reconstruct"
    assert _run(sub, CONFIGS / cfg, tmp_path / "o") == 0


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, "[membership]\nH = 0.3\nd = 1\nx = 0\n")
    proc = subprocess.run([sys.executable, "-m", "fbmcurrent", "membership", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "membership.csv").exists()


def test_membership_example_row(tmp_path):
    cfg = _write(tmp_path, "[membership]\nH = 0.6\nd = 2\nx = 0\nN = 1\n")
    assert _run("membership", cfg, tmp_path / "o") == 0
    cols, rows = read_csv(tmp_path / "o" / "membership.csv")
    row = dict(zip(cols, rows[0]))
    assert row["member"] == "true" and row["rule"] == "thm_trunc"
    assert float(row["slack"]) == pytest.approx(0.6, abs=1e-15)


def test_gamma_check_grid_residuals(tmp_path):
    cfg = _write(tmp_path, "[gamma-check]\nH = 0.3, 0.5, 0.7\nd = 1\nx = 1, 0.4\nT = 1, 2\n")
    assert _run("gamma-check", cfg, tmp_path / "o") == 0
    cols, rows = read_csv(tmp_path / "o" / "gamma_check.csv")
    assert len(rows) == 12
    assert all(float(r[cols.index("residual")]) < 1e-8 for r in rows)
