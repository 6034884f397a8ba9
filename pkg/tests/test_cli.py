import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from drbounds import cli
from drbounds.suite import CheckResult

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
seed = 3
[budgets]
e = { coef = 1.0, exponent = -0.25 }
e_prime = { coef = 1.0, exponent = -0.25 }
f = { coef = 1.0, exponent = -0.25 }
[rates]
n = [1024, 2048, 4096, 8192]
reps = 40
gamma = [0.5, 0.9]
[distinguish]
n = 32
trials = 40
levels = [6, 4]
[scenario]
c = 0.4
"""


def body(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config=") and " seed=" in lines[0]
    return lines[1:]


def rows(path):
    return list(csv.DictReader(body(path)))


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL)
    return p


def test_verify_bundled_case1(tmp_path, capsys):
    assert cli.main(["verify", "--config", str(CONFIGS / "case1.toml"), "--out", str(tmp_path)]) == 0
    out = rows(tmp_path / "verify.csv")
    assert out and all(r["passed"] == "true" for r in out)
    assert {r["case"] for r in out} >= {"Case1", "Case2", "Case3", "Case4", "ATT"}
    meta = json.loads((tmp_path / "verify.csv.meta.json").read_text())
    assert meta["config_sha256"] in (tmp_path / "verify.csv").read_text().splitlines()[0]


def test_bad_gamma_exit_code(tmp_path, capsys):
    assert cli.main(["rates", "--config", str(CONFIGS / "bad_gamma.toml"), "--out", str(tmp_path)]) == 2
    assert "gamma" in capsys.readouterr().err
    assert not any(tmp_path.iterdir())


def test_seed_override_validated(small, tmp_path, capsys):
    assert cli.main(["rates", "--config", str(small), "--out", str(tmp_path), "--seed", "-1"]) == 2
    assert "seed" in capsys.readouterr().err


def test_rates_outputs_and_reproducibility(small, tmp_path):
    out = tmp_path / "o"
    assert cli.main(["rates", "--config", str(small), "--out", str(out)]) == 0
    first = (out / "rates.csv").read_bytes()
    header = (out / "rates.csv").read_text().splitlines()[1]
    assert header == "n,gamma,quantile_risk,reps,estimator,case"
    assert len(rows(out / "rates.csv")) == 8
    assert (out / "rates.svg").read_text().startswith("<svg")
    assert cli.main(["rates", "--config", str(small), "--out", str(out), "--threads", "3"]) == 0
    assert (out / "rates.csv").read_bytes() == first
    assert cli.main(["rates", "--config", str(small), "--out", str(out), "--seed", "99"]) == 0
    assert (out / "rates.csv").read_bytes() != first
    assert "seed=99" in (out / "rates.csv").read_text().splitlines()[0]


def test_rates_slope_with_quarter_power_budgets(tmp_path):
    assert cli.main(["rates", "--config", str(CONFIGS / "rates_wate.toml"), "--out", str(tmp_path),
                     "--threads", "4"]) == 0
    fit = rows(tmp_path / "rates_fit.csv")
    assert abs(float(fit[0]["fitted_slope"]) + 0.5) <= 0.15


def test_distinguish_and_report(small, tmp_path):
    assert cli.main(["distinguish", "--config", str(small), "--out", str(tmp_path)]) == 0
    dist = rows(tmp_path / "distinguish.csv")
    assert [int(r["M"]) for r in dist] == [64, 16]
    assert cli.main(["report", "--config", str(small), "--out", str(tmp_path)]) == 0
    summary = rows(tmp_path / "summary.csv")
    assert {r["source"] for r in summary} == {"distinguish.csv"}


def test_report_without_inputs_is_config_error(small, tmp_path):
    assert cli.main(["report", "--config", str(small), "--out", str(tmp_path)]) == 2


def test_adversary_record(tmp_path):
    assert cli.main(["adversary", "--config", str(CONFIGS / "case1.toml"), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "adversary.txt").read_text()
    assert text.startswith("# config=")
    assert "[ATT]" in text and "C_u = " in text and "mixture_equality = " in text


def test_invariant_failure_exit_code(tmp_path, monkeypatch):
    def failing(family, budget, lams):
        return [CheckResult("separation", family.case, -1.0, 0.0, False)]

    monkeypatch.setattr(cli, "check_family", failing)
    assert cli.main(["verify", "--config", str(CONFIGS / "case1.toml"), "--out", str(tmp_path)]) == 3
    # the failing table is kept for inspection
    assert (tmp_path / "verify.csv").exists()


def test_partial_outputs_removed_on_failure(small, tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("disk full")

    monkeypatch.setattr(cli, "loglog_svg", broken)
    with pytest.raises(RuntimeError):
        cli.main(["rates", "--config", str(small), "--out", str(tmp_path)])
    assert not (tmp_path / "rates.csv").exists()
    assert not (tmp_path / "rates_fit.csv").exists()


def test_module_entry_point(small, tmp_path):
    res = subprocess.run([sys.executable, "-m", "drbounds", "rates", "--config", str(CONFIGS / "bad_gamma.toml"),
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 2 and "rates.gamma" in res.stderr
