import json
import subprocess
import sys
from pathlib import Path

import pytest

from triboltz.cli import EXIT_FAIL, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main

SMALL = """\
d = 2
n = 300
dt = 0.02
t_end = 0.2
seed = 2
orders = 3, 4
odi_particles = 2000
odi_pairs = 4000
verify_samples = 500
"""


@pytest.fixture
def conf(tmp_path):
    p = tmp_path / "small.conf"
    p.write_text(SMALL)
    return p


def cli(*argv):
    return main([str(a) for a in argv])


def test_constants_report(conf, tmp_path, full_tables, capsys):
    out = tmp_path / "c"
    assert cli("constants", "--config", conf, "--out", out) == EXIT_OK
    rep = json.loads((out / "constants.json").read_text())
    q4 = rep["entries"]["q=4"]
    assert {"alpha", "lambda", "C", "C_prime", "C_tilde", "logKq"} <= set(q4)
    assert q4["alpha"] == pytest.approx(full_tables[0].values[2])
    assert rep["entries"]["wellposed"]["A"] > 0
    assert "A_(2+2gamma)" in capsys.readouterr().out
    first = (out / "constants.json").read_bytes()
    assert cli("constants", "--config", conf, "--out", out) == EXIT_OK
    assert (out / "constants.json").read_bytes() == first
    man = json.loads((out / "manifest.json").read_text())
    assert man["outputs"]["constants.json"]["sha256"]
    assert man["coercive_tables"] == rep["tables_digest"]


def test_verify_kinematics_passes(conf, tmp_path, capsys):
    out = tmp_path / "v"
    assert cli("verify", "--config", conf, "--out", out, "--suite", "kinematics") == EXIT_OK
    assert json.loads((out / "verify.json").read_text())["ok"]
    assert "FAIL" not in capsys.readouterr().out


def test_verify_odi_fault_injection(conf, tmp_path, full_tables, capsys):
    out = tmp_path / "v"
    code = cli("verify", "--config", conf, "--out", out, "--suite", "odi",
               "--override", "C:4=1e-6")
    assert code == EXIT_FAIL
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["counterexample"]["q"] == 4.0 and err["counterexample"]["rhs"] < 0
    assert cli("verify", "--config", conf, "--out", out, "--suite", "odi") == EXIT_OK


@pytest.mark.parametrize("override", ["alpha:4=100", "lambda:4=1e9"])
def test_numerical_failure_exit(conf, tmp_path, override, full_tables, capsys):
    assert cli("constants", "--config", conf, "--out", tmp_path,
               "--override", override) == EXIT_NUMERIC
    assert "coercive gap" in capsys.readouterr().err


@pytest.mark.parametrize("override", ["alpha=4", "beta:4=1", "C:4=-1", "C:4=nan"])
def test_bad_override(conf, tmp_path, override, capsys):
    assert cli("constants", "--config", conf, "--out", tmp_path,
               "--override", override) == EXIT_USAGE
    assert "override" in capsys.readouterr().err


def test_config_errors(tmp_path, capsys):
    assert cli("simulate", "--config", tmp_path / "missing.conf") == EXIT_USAGE
    bad = tmp_path / "bad.conf"
    bad.write_text("gamma2 = 3\n")
    assert cli("simulate", "--config", bad, "--out", tmp_path) == EXIT_USAGE
    assert "violates hypothesis" in capsys.readouterr().err
    low = tmp_path / "low.conf"
    low.write_text(SMALL.replace("orders = 3, 4", "orders = 2"))
    assert cli("constants", "--config", low, "--out", tmp_path) == EXIT_USAGE


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["simulate"])
    assert exc.value.code == EXIT_USAGE


def test_simulate_is_reproducible(conf, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli("simulate", "--config", conf, "--out", a) == EXIT_OK
    assert cli("simulate", "--config", conf, "--out", b) == EXIT_OK
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    man = json.loads((a / "manifest.json").read_text())
    assert man["seed"] == 2 and man["drift"]["energy"] <= 1e-8
    assert Path(man["outputs"]["trajectory.csv"]["path"]) == a / "trajectory.csv"
    c = tmp_path / "c"
    assert cli("simulate", "--config", conf, "--out", c, "--seed", 9) == EXIT_OK
    assert (c / "trajectory.csv").read_bytes() != (a / "trajectory.csv").read_bytes()
    assert json.loads((c / "manifest.json").read_text())["seed"] == 9


def test_envelope_check(tmp_path, full_tables, capsys):
    conf = tmp_path / "ball.conf"
    conf.write_text("n = 2000\ndt = 0.01\nt_end = 0.5\nseed = 3\ninitial = compact_ball\n"
                    "radius = 4.0\nenvelope_order = 4\nexp_n = 8\n")
    code = cli("envelope-check", "--config", conf, "--out", tmp_path)
    res = json.loads((tmp_path / "envelope.json").read_text())
    assert code == (EXIT_OK if res["ok"] else EXIT_FAIL)
    assert code == EXIT_OK and res["exp_a"] > 0
    header = (tmp_path / "envelope.csv").read_text().splitlines()[0]
    assert header.startswith("t,m_q,sigma,log_env_combined")
    assert "PASS envelope" in capsys.readouterr().out


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "triboltz.cli", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
