import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from bondsym.cli import run

BSM_INI = """\
[params]
alpha = 0
beta = 0.3
gamma = 1
lambda = 0
rho = 0.5

[problem]
source = beta*u
payoff = 1

[grid]
grid = 11,1001
xrange = 0.5,2
trange = 0,1
"""


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_cases_lists_catalog():
    code, out, _ = call("cases")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 8
    assert lines[1].startswith("T-GammaOne") and "beta = rho^2/2" in lines[1]


def test_verify_catalog_residuals(tmp_path):
    path = tmp_path / "report.jsonl"
    code, _, err = call("verify", "--suite", "catalog-residuals", "--out", str(path))
    assert code == 0
    recs = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(recs) == 8 and all(r["pass"] for r in recs)
    assert set(recs[0]) == {"check", "case", "n", "max", "tol", "pass"}
    assert "8/8 checks passed" in err


def test_verify_case_filter_and_tol_override():
    code, out, _ = call("verify", "--suite", "terminal", "--case", "T-GammaHalf")
    assert code == 0 and len(out.splitlines()) == 1
    code, out, _ = call("verify", "--suite", "catalog-residuals", "--case", "T-GammaOne", "--tol", "1e-300")
    assert code == 1 and json.loads(out)["pass"] is False


def test_price_bsm_from_config(tmp_path):
    ini = tmp_path / "bsm.ini"
    ini.write_text(BSM_INI)
    out_csv = tmp_path / "u.csv"
    code, _, err = call("price", "--config", str(ini), "--out", str(out_csv))
    assert code == 0, err
    text = out_csv.read_text()
    assert text.startswith("x,t,u\n")
    data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1)
    assert data.shape == (11 * 1001, 3)
    # row-major over t then x
    assert np.all(np.diff(data[:11, 0]) > 0) and np.all(data[:11, 1] == 0.0)
    start = data[data[:, 1] == 0.0]
    assert np.max(np.abs(start[:, 2] - math.exp(0.3 * (0.0 - 1.0)))) < 1e-8


def test_flags_override_config(tmp_path):
    ini = tmp_path / "bsm.ini"
    ini.write_text(BSM_INI)
    code, out, _ = call("price", "--config", str(ini), "--grid", "5,3")
    assert code == 0
    assert len(out.splitlines()) == 1 + 15


def test_outputs_byte_identical(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    call("verify", "--suite", "derivatives", "--seed", "7", "--out", str(a))
    call("verify", "--suite", "derivatives", "--seed", "7", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    c, d = tmp_path / "c.csv", tmp_path / "d.csv"
    call("oracle", "--case", "T-GammaHalf", "--grid", "7,5", "--out", str(c))
    call("oracle", "--case", "T-GammaHalf", "--grid", "7,5", "--out", str(d))
    assert c.read_bytes() == d.read_bytes()


def test_seed_env_fallback(monkeypatch):
    monkeypatch.setenv("BONDSYM_SEED", "3")
    _, env_out, _ = call("verify", "--suite", "catalog-residuals", "--case", "T-Generic")
    _, flag_out, _ = call("verify", "--suite", "catalog-residuals", "--case", "T-Generic", "--seed", "3")
    _, other, _ = call("verify", "--suite", "catalog-residuals", "--case", "T-Generic", "--seed", "4")
    assert env_out == flag_out
    assert other != env_out
    monkeypatch.setenv("BONDSYM_SEED", "x")
    assert call("verify", "--suite", "terminal")[0] == 2


def test_oracle_values():
    code, out, _ = call("oracle", "--case", "T-GammaHalf", "--grid", "3,2", "--trange", "0.5,1")
    assert code == 0
    r = rows(out)
    assert len(r) == 6
    assert all(float(x["u"]) == 1.0 for x in r if float(x["t"]) == 1.0)


def test_transform_prints_chain():
    code, out, _ = call("transform", "--case", "T-GammaOne")
    assert code == 0
    assert "trivial -> zeroing[GammaOne] -> gamma_zero[GammaOne]" in out
    assert "image source:" in out
    code, out, _ = call("transform", "--params", "gamma=0.3,delta=0.4,rho=0.8", "--source", "x*u")
    assert code == 0 and "equation: bond -> heat" in out


def test_flow_pass_and_fail():
    assert call("flow", "--case", "T-GammaHalf")[0] == 0
    code, out, _ = call("flow", "--case", "T-GammaHalf", "--generator", "x^2;1;0", "--epsilons", "0.1")
    assert code == 1 and json.loads(out)["pass"] is False


@pytest.mark.parametrize("argv", [
    ["bogus"],
    [],
    ["verify", "--suite", "nope"],
    ["oracle"],
    ["oracle", "--case", "Z"],
    ["price", "--source", "u*"],
    ["price", "--source", "k*u"],
    ["price", "--params", "kappa=1", "--source", "u"],
    ["price", "--source", "u", "--grid", "10"],
    ["price", "--source", "u", "--far-field", "dirichlet"],
    ["verify", "--config", "/nonexistent.ini"],
    ["flow", "--case", "T-GammaHalf", "--generator", "1;0"],
])
def test_usage_errors(argv):
    assert call(*argv)[0] == 2


def test_numeric_failure_exit_1():
    code, _, err = call("price", "--source", "u", "--params", "gamma=0.5", "--xrange", "0,1")
    assert code == 1 and "x_min" in err


def test_bad_config_key(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[grid]\nresolution = 3\n")
    assert call("verify", "--config", str(ini))[0] == 2


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "bondsym", "cases"], capture_output=True, text=True)
    assert p.returncode == 0 and len(p.stdout.splitlines()) == 8
