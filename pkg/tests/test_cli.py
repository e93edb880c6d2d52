import csv
import io
import json
import subprocess
import sys

import pytest

from fora_sim.cli import main
from fora_sim.model import load_instance, load_summary


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path, capsys):
    pair3 = tmp_path / "pair3.json"
    late_top = tmp_path / "late_top.json"
    assert run(capsys, "hardgen", "aon-stationary", "--eps", "0.25", "-o", pair3)[0] == 0
    assert run(capsys, "hardgen", "general-tight", "--n", 2, "--beta", "0.5,1", "--rho", 1,
               "--eps", "0.1", "--t", 4, "-o", late_top)[0] == 0
    return tmp_path, pair3, late_top


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_bounds(files, capsys):
    _, pair3, late_top = files
    code, out, _ = run(capsys, "bounds", pair3)
    assert code == 0
    vals = dict(line.split() for line in out.splitlines())
    assert float(vals["general"]) == pytest.approx(0.4)
    assert float(vals["stationary_exact"]) == pytest.approx(0.625)
    assert float(vals["stationary_floor"]) == pytest.approx(0.5179132265677134)
    _, out, _ = run(capsys, "bounds", late_top)
    assert "stationary_exact n/a" in out


def test_validate(files, capsys):
    tmp, pair3, _ = files
    code, out, _ = run(capsys, "validate", pair3)
    assert code == 0 and "r_beta=1.5" in out
    bad = tmp / "bad.json"
    bad.write_text(json.dumps({"capacity": 4, "horizon": 2, "groups": 1, "priorities": [1],
                               "arrivals": {"kind": "time_varying",
                                            "entries": [{"t": 1, "i": 1, "j": 5, "p": 0.1},
                                                        {"t": 2, "i": 1, "j": 1, "p": -1}]}}))
    code, _, err = run(capsys, "validate", bad)
    assert code == 2
    assert "DemandOutOfRange" in err and "NegativeProbability" in err
    assert run(capsys, "validate", tmp / "missing.json")[0] == 2


def test_hardgen_round_trip(files, capsys):
    _, pair3, late_top = files
    assert float(load_summary(load_instance(late_top)).r_beta) == pytest.approx(1, abs=1e-12)
    assert load_instance(pair3).capacity == 4
    code, out, _ = run(capsys, "hardgen", "full-support", "--beta", "0.5,1", "--rho", "1",
                       "--eps", "0.1", "--t", 4, "--k", 3)
    assert code == 0
    assert json.loads(out)["family"]["name"] == "full-support"
    code, _, err = run(capsys, "hardgen", "general-tight", "--beta", "0.5,1", "--rho", 1,
                       "--eps", "0.1", "--t", 2)
    assert code == 3 and "increase T" in err
    assert run(capsys, "hardgen", "full-support", "--rho", 1)[0] == 2


def test_exact_example(files, capsys):
    _, _, late_top = files
    code, out, err = run(capsys, "exact", late_top, "--policy", "threshold-weighted")
    assert code == 0
    table = rows(out)
    assert [r["source"] for r in table] == ["exact", "exact"]
    assert all(abs(float(r["fe_fr_beta"]) - 0.5) <= 1e-12 for r in table)
    assert float(err.split("=")[1]) == pytest.approx(0.5, abs=1e-12)
    code, out, _ = run(capsys, "exact", late_top, "--policy", "threshold-weighted", "--exact-rational")
    assert [r["fe_fr_beta"] for r in rows(out)] == ["0.5", "0.5"]


def test_exact_state_limit(files, capsys):
    _, pair3, _ = files
    code, _, err = run(capsys, "exact", pair3, "--policy", "rcb", "--state-limit", 2)
    assert code == 4 and "projected" in err


def test_simulate_csv(files, capsys):
    tmp, pair3, late_top = files
    code, out, _ = run(capsys, "simulate", pair3, "--policy", "aon-greedy", "--trials", 1000)
    assert code == 0
    (row,) = rows(out)
    assert list(row) == ["group", "beta", "mean_alloc", "mean_demand", "fe_fr_beta", "se",
                         "ci_lo", "ci_hi", "bound_general", "bound_stationary", "flag"]
    assert row["fe_fr_beta"] == "0.5" and row["bound_stationary"] == "0.625"
    out_path = tmp / "sim.csv"
    argv = ["simulate", late_top, "--policy", "threshold-weighted", "--trials", 5000, "--seed", 9,
            "--track-rfe-fr", "--fill-rate", "-o", out_path]
    assert run(capsys, *argv)[0] == 0
    first = out_path.read_text()
    assert run(capsys, *argv)[0] == 0
    assert out_path.read_text() == first
    assert "fill_rate" in first.splitlines()[0]
    rfe = rows((tmp / "sim_rfe.csv").read_text())
    assert {(r["t"], r["group"], r["demand"]) for r in rfe} == {
        ("1", "1", "4"), ("2", "1", "4"), ("3", "1", "4"), ("4", "2", "4")}


def test_simulate_deny(files, capsys):
    _, pair3, late_top = files
    code, out, _ = run(capsys, "simulate", late_top, "--policy", "denylist-greedy", "--deny", "2",
                       "--trials", 500)
    assert code == 0 and float(rows(out)[1]["fe_fr_beta"]) == 0
    assert run(capsys, "simulate", late_top, "--policy", "rcb", "--deny", "2")[0] == 2


def test_longrun(files, capsys):
    _, pair3, _ = files
    code, out, _ = run(capsys, "longrun", pair3, "--policy", "aon-greedy", "--days", 10)
    assert code == 0
    table = rows(out)
    assert len(table) == 10 and {r["cumulative_ratio"] for r in table} == {"0.5"}
    _, out, _ = run(capsys, "longrun", pair3, "--policy", "rcb", "--days", 100, "--stride", 30)
    assert [r["day"] for r in rows(out)] == ["30", "60", "90", "100"]


def test_gamma_csv(files, capsys):
    _, pair3, _ = files
    code, out, _ = run(capsys, "gamma", pair3)
    assert code == 0
    budget, gamma = out.strip().split("\n\n")
    b = rows(budget)
    assert len(b) == 2 * 5
    g = {(r["t"], r["j"]): r for r in rows(gamma)}
    assert g[("2", "3")]["gamma"] == "0.73333333333333328"
    assert float(g[("1", "3")]["accept"]) == pytest.approx(0.4)


def test_audit(files, capsys):
    _, pair3, late_top = files
    code, out, _ = run(capsys, "audit", late_top, "--policy", "threshold-weighted")
    assert code == 0
    assert "PASS general-tight" in out and "0.526315789474" in out
    code, out, _ = run(capsys, "audit", pair3, "--policy", "aon-greedy", "--trials", 2000)
    assert code == 0 and "PASS aon-stationary-all-or-nothing" in out


def test_report(capsys):
    code, out, _ = run(capsys, "report", "--r", "0,1.5", "--t", "2")
    assert code == 0
    table = rows(out)
    assert [table[0][k] for k in ("general", "stationary_exact", "stationary_floor")] == ["1.0"] * 3
    assert table[1]["general"] == "0.4" and table[1]["stationary_exact"] == "0.625"
    _, out, _ = run(capsys, "report", "--r", "1.5", "--t", "")
    (row,) = rows(out)
    assert row["t"] == "" and row["stationary_exact"] == ""
    _, out, _ = run(capsys, "report")
    assert len(rows(out)) == 51 * 5


def test_console_script(files):
    _, pair3, _ = files
    proc = subprocess.run([sys.executable, "-m", "fora_sim.cli", "bounds", str(pair3)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "general 0.4" in proc.stdout
