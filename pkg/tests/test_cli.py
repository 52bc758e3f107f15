import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from finvariant.cli import main, parse_fraction, parse_range

ROOT = Path(__file__).resolve().parents[1]
SYSTEMS = ROOT / "systems"


def run(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "finvariant.cli", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


def test_parse_helpers():
    assert parse_fraction("1/50").denominator == 50
    assert parse_fraction("2") == 2
    with pytest.raises(Exception):
        parse_fraction("0.02")
    assert parse_range("20..60..20") == [20, 40, 60]
    assert parse_range("3..5") == [3, 4, 5]
    assert parse_range("4,8") == [4, 8]
    with pytest.raises(Exception):
        parse_range("5..1")


@pytest.mark.parametrize("name,value", [
    ("bernoulli_half", math.log(2)),
    ("identity_action_3", -math.log(3)),
    ("markov_negative", -math.log(2)),
])
def test_f_command(tmp_path, name, value):
    out = tmp_path / "f.json"
    res = run("f", SYSTEMS / f"{name}.json", "--levels", 2, "--out", out, "--format", "json")
    assert res.returncode == 0, res.stderr
    doc = json.loads(out.read_text())
    assert doc["minimum"] == pytest.approx(value, abs=1e-6)
    assert len(doc["rows"]) == 3
    rec = json.loads((tmp_path / "f.json.record.json").read_text())
    assert rec["command"][0] == "f" and rec["version"]


def test_f_one_symbol(tmp_path):
    p = tmp_path / "one.json"
    p.write_text(json.dumps({"variant": "bernoulli", "group": {"rank": 2},
                             "alphabet": ["a"], "kappa": [[1, 1]]}))
    assert main(["f", str(p), "--levels", "1"]) == 0


def test_schema_error_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"variant": "bernoulli", "group": {"rank": 2},
                             "alphabet": ["a", "b"], "kappa": [[1, 2], [1, 3]]}))
    assert run("f", p).returncode == 2
    p.write_text("{not json")
    assert run("f", p).returncode == 2
    assert run("f", tmp_path / "missing.json").returncode == 2
    assert run("rate", SYSTEMS / "markov_rate.json", "--epsilon", "0.1", "--n-range", "2").returncode == 2


def test_budget_exit_3():
    res = run("f", SYSTEMS / "markov_asym.json", "--levels", 1, "--budget", 10)
    assert res.returncode == 0  # closed form covers Markov above the cap
    res = run("mc", SYSTEMS / "bernoulli_half.json", "--epsilon", "1/2", "--n-range", 30,
              "--budget", 1000)
    assert res.returncode == 3
    res = run("rate", SYSTEMS / "markov_rate.json", "--epsilon", "1/2", "--n-range", 40,
              "--budget", 10)
    assert res.returncode == 3


def test_verify_count():
    res = run("verify-count", "--n-max", 4, "--r", 1)
    assert res.returncode == 0 and "FAIL" not in res.stdout
    res = run("verify-count", "--n-max", 3, "--r", 2)
    assert res.returncode == 0
    res = run("verify-count", "--n-max", 5, "--alphabet", 1)
    assert res.returncode == 0


def test_verify_count_reports_witness(monkeypatch, capsys):
    from finvariant import cli
    from fractions import Fraction
    monkeypatch.setattr(cli, "brute_force_expected_count", lambda W, n, budget: Fraction(-1))
    assert cli.main(["verify-count", "--n-max", "2"]) == 1
    err = capsys.readouterr().err
    assert "mismatch" in err and '"edges"' in err


def test_rate_csv(tmp_path):
    out = tmp_path / "rate.csv"
    res = run("rate", SYSTEMS / "bernoulli_half.json", "--epsilon", "4", "--n-range", "1..5..2",
              "--out", out)
    assert res.returncode == 0, res.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "n,log_count,rate,F_target,epsilon_num,epsilon_den"
    for line in lines[1:]:
        n, lc, rate, F, en, ed = line.split(",")
        assert float(rate) == pytest.approx(math.log(2), abs=1e-12)
        assert (en, ed) == ("4", "1")


def test_mc_is_byte_identical(tmp_path):
    args = ["mc", SYSTEMS / "markov_rate.json", "--epsilon", "1/2", "--n-range", "4..8..4",
            "--samples", 40, "--seed", 99, "--out"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(*args, a).returncode == 0
    assert run(*args, b).returncode == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "n,samples,mean,stderr,rate,seed"
    rec = json.loads((tmp_path / "a.csv.record.json").read_text())
    assert rec["config"]["seed"] == 99 and rec["config"]["epsilon"] == "1/2"


def test_replay(tmp_path):
    out = tmp_path / "m.csv"
    assert run("mc", SYSTEMS / "bernoulli_half.json", "--epsilon", "1/2", "--n-range", 6,
               "--samples", 10, "--out", out).returncode == 0
    res = run("replay", str(out) + ".record.json")
    assert res.returncode == 0 and "identical" in res.stdout


@pytest.mark.parametrize("omega", ["omega_swap.json", "omega_invert.json"])
def test_auto(omega):
    res = run("auto", SYSTEMS / "markov_asym.json", SYSTEMS / omega, "--levels", 1)
    assert res.returncode == 0, res.stderr


def test_auto_identity(tmp_path):
    p = tmp_path / "id.json"
    p.write_text(json.dumps({"images": ["s1", "s2"], "inverse_images": ["s1", "s2"]}))
    out = tmp_path / "auto.csv"
    assert run("auto", SYSTEMS / "markov_asym.json", p, "--out", out).returncode == 0
    assert all(line.endswith(",0.0") for line in out.read_text().splitlines()[1:])


def test_auto_rejects_non_automorphism(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"images": ["s1 s2", "s2"], "inverse_images": ["s1", "s2"]}))
    assert run("auto", SYSTEMS / "markov_asym.json", p).returncode == 2
