"""Command line behavior: output, exit codes, determinism."""

import json
import math

import numpy as np
import pytest

from bcdp import (PrivacyDemand, calibrate_budgets, masked_table_mechanism,
                  uniform_prior, write_kernel, write_prior)
from bcdp.cli import cli_entry

MEAN_TOML = ('delta = [0.3, 0.3, 2.0]\nepsilon = 2.0\nq_grid = [0.0, 0.6]\n'
             'n = 50\ntrials = 2\n')
OLS_TOML = ('delta = [0.5, 0.5, 2.0]\nepsilon = 2.0\nq = 0.0\n'
            'theta_star = [0.4, 0.3]\nn_grid = [40, 80]\ntrials = 2\n')


def test_calibrate_text_and_json(capsys):
    args = ["calibrate", "--epsilon", "2", "--delta", "0.2,0.2,2,2,2,2,2,2,2,2",
            "--q", "0.5", "--zeta", "0.5"]
    assert cli_entry(args) == 0
    text = capsys.readouterr().out
    golden = repr(0.19090282892638189)
    assert f"coordinate 0: budget {golden}" in text
    assert f"total spend: {golden}" in text
    # uniform budgets certify at exactly the total spend, under demand
    assert f"certified {golden}" in text
    assert cli_entry(args + ["--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    demand = PrivacyDemand(2.0, np.array([0.2, 0.2] + [2.0] * 8), 0.5, 0.5)
    budget = calibrate_budgets(demand)
    np.testing.assert_array_equal(payload["c"], budget.caller_order())
    assert payload["total"] == budget.total
    assert len(payload["certified"]) == 10


def test_calibrate_rejects_bad_demands(capsys):
    assert cli_entry(["calibrate", "--epsilon", "2", "--delta", "0.5",
                      "--q", "1.5"]) == 1
    assert "error:" in capsys.readouterr().err
    assert cli_entry(["calibrate", "--epsilon", "2", "--delta", "a,b",
                      "--q", "0.5"]) == 1
    # argparse usage failure: missing required flag
    assert cli_entry(["calibrate", "--epsilon", "2"]) == 1


def test_audit_reports_and_checks(tmp_path, capsys):
    kpath = str(tmp_path / "kernel.txt")
    ppath = str(tmp_path / "prior.txt")
    write_kernel(masked_table_mechanism(), kpath)
    write_prior(uniform_prior((2, 2)), ppath)
    assert cli_entry(["audit", "--kernel", kpath, "--prior", ppath]) == 0
    out = capsys.readouterr().out
    assert "ldp: inf" in out
    log2 = repr(math.log(2.0))
    assert f"bcdp: {log2} {log2}" in out

    ok = cli_entry(["audit", "--kernel", kpath, "--prior", ppath,
                    "--check", f"{math.log(2.0)},{math.log(2.0)}"])
    assert ok == 0
    assert "check: pass" in capsys.readouterr().out

    bad = cli_entry(["audit", "--kernel", kpath, "--prior", ppath,
                     "--check", f"{math.log(2.0) - 1e-6},{math.log(2.0)}"])
    assert bad == 3
    out = capsys.readouterr().out
    assert "check: fail" in out and "coordinate=0" in out


def test_audit_missing_file(tmp_path, capsys):
    assert cli_entry(["audit", "--kernel", str(tmp_path / "no.txt"),
                      "--prior", str(tmp_path / "no2.txt")]) == 2
    assert "error:" in capsys.readouterr().err


def test_mean_sim_runs_and_is_byte_deterministic(tmp_path, capsys):
    config = tmp_path / "mean.toml"
    config.write_text(MEAN_TOML)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        code = cli_entry(["mean-sim", "--config", str(config), "--seed",
                          "123", "--out", str(out)])
        assert code == 0
    capsys.readouterr()
    for suffix in (".raw.csv", ".summary.csv"):
        a = (tmp_path / ("a" + suffix)).read_bytes()
        b = (tmp_path / ("b" + suffix)).read_bytes()
        assert a == b and len(a) > 0


def test_mean_sim_flag_overrides(tmp_path, capsys):
    config = tmp_path / "mean.toml"
    config.write_text(MEAN_TOML)
    code = cli_entry(["mean-sim", "--config", str(config), "--seed", "1",
                      "--out", str(tmp_path / "o"), "--trials", "1",
                      "--n", "20"])
    assert code == 0
    capsys.readouterr()
    manifest = json.loads((tmp_path / "o.manifest.json").read_text())
    assert manifest["config"]["trials"] == 1
    assert manifest["config"]["n"] == 20


def test_mean_sim_requires_seed(tmp_path):
    config = tmp_path / "mean.toml"
    config.write_text(MEAN_TOML)
    assert cli_entry(["mean-sim", "--config", str(config), "--out",
                      str(tmp_path / "o")]) == 1


def test_ols_sim_runs(tmp_path, capsys):
    config = tmp_path / "ols.toml"
    config.write_text(OLS_TOML)
    code = cli_entry(["ols-sim", "--config", str(config), "--seed", "9",
                      "--out", str(tmp_path / "r")])
    assert code == 0
    capsys.readouterr()
    manifest = json.loads((tmp_path / "r.manifest.json").read_text())
    assert manifest["kind"] == "ols"
    raw = (tmp_path / "r.raw.csv").read_text().splitlines()
    assert raw[0] == "n,mechanism,trial,excess_risk"
    assert len(raw) == 1 + 2 * 2 * 2


def test_bad_config_key_exits_one(tmp_path, capsys):
    config = tmp_path / "mean.toml"
    config.write_text(MEAN_TOML + "bogus = 3\n")
    assert cli_entry(["mean-sim", "--config", str(config), "--seed", "1",
                      "--out", str(tmp_path / "o")]) == 1
    assert "unknown config keys" in capsys.readouterr().err
