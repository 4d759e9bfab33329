import json
import subprocess
import sys

import numpy as np
import pytest

from noncutoff.harness import checks, report
from noncutoff.harness.checks import Assertion, CheckResult, select
from noncutoff.harness.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, main
from noncutoff.harness.config import ConfigError, from_dict, load, solver_config, sweep_settings


def write_cfg(tmp_path, name="cfg.json", **d):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return p


# --- configuration ------------------------------------------------------------------

def test_defaults_and_digest():
    cfg = from_dict({})
    assert cfg.params.s == 0.25 and cfg.suite == ["all"]
    other = from_dict({"output": "elsewhere"})
    assert cfg.digest() == other.digest()
    assert cfg.digest() != from_dict({"seed": 1}).digest()
    assert from_dict({"suite": "lp"}).suite == ["lp"]
    assert from_dict({"p": 5, "n": 3}).params.gamma == 0.0


@pytest.mark.parametrize("d", [{"bogus": 1}, {"suite": "plasma"}, {"scale": "huge"},
                               {"basis_N": 17}, {"grid_N": 0}, {"K_max": 2.5},
                               {"n": 2, "gamma": -1.0}, {"solver": {"N": 4, "dt": -1}},
                               {"solver": {"colour": 1}}, {"solver": 3},
                               {"sweep": {"N": [32]}}, {"sweep": {"configs": [[2, 0.0]]}},
                               {"sweep": {"probe": {"depth": 1}}}, {"sweep": {"extra": 1}}, []])
def test_config_errors(d):
    with pytest.raises(ConfigError):
        from_dict(d)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load(bad)


def test_solver_and_sweep_sections():
    cfg = from_dict({"gamma": 0.5, "solver": {"N": 4, "t_end": 1.0}})
    sc = solver_config(cfg)
    assert sc.params.gamma == 0.5 and sc.N == 4 and sc.seed == cfg.seed
    st = sweep_settings(from_dict({"sweep": {"N": [4]}}))
    assert st["N"] == [4] and len(st["params"]) == 3


def test_select():
    assert select(from_dict({})) == [f"c{k:02d}" for k in range(1, 17)]
    assert select(from_dict({"suite": ["kernel", "lp"]})) == ["c01", "c02", "c03", "c04"]
    assert select(from_dict({"checks": ["c10", "c02"]})) == ["c02", "c10"]
    with pytest.raises(ConfigError):
        select(from_dict({"checks": ["c42"]}))


# --- status logic -----------------------------------------------------------------------

def _res(*flags, error=""):
    items = [Assertion(f"a{i}", ok, 0.0, 1.0, known) for i, (ok, known) in enumerate(flags)]
    return CheckResult("c00", 0, "kernel", "t", items, error=error)


def test_check_status():
    assert _res((True, False)).status == "pass"
    assert _res((True, False), (False, True)).status == "xfail"
    assert _res((False, True), (False, False)).status == "fail"
    assert _res((True, False), error="boom").status == "fail"
    assert report._overall(["pass", "xfail"]) == "xfail"
    assert report._overall(["xfail", "fail", "pass"]) == "fail"


def test_check_exception_recorded(monkeypatch):
    def boom(cfg, r):
        raise RuntimeError("no convergence")
    monkeypatch.setitem(checks.CRITERIA, "c99", (99, "kernel", "exploding", boom))
    res = checks.run_check("c99", from_dict({}))
    assert res.status == "fail" and "no convergence" in res.error


# --- CLI ------------------------------------------------------------------------------------

def test_run_pass_and_report(tmp_path, capsys):
    cfg = write_cfg(tmp_path, suite="kernel")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == EXIT_PASS
    rows = report.read_csv(out / "checks.csv")
    assert {r["check"] for r in rows} == {"c01", "c02"}
    assert all(r["passed"] == "true" for r in rows)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "pass"
    assert json.loads((out / "suites" / "kernel.json").read_text())["status"] == "pass"
    capsys.readouterr()
    assert main(["report", str(out)]) == EXIT_PASS
    assert "c01" in capsys.readouterr().out


def test_run_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, suite=["kernel", "lp"], scale="quick")
    for k in (1, 2):
        assert main(["run", str(cfg), "--out", str(tmp_path / f"o{k}")]) == EXIT_PASS
    a, b = ((tmp_path / f"o{k}" / "checks.csv").read_bytes() for k in (1, 2))
    assert a == b


def test_run_failure_exit_code(tmp_path, monkeypatch):
    def bad(cfg, r):
        r.le("always too big", 2.0, 1.0)
    def known(cfg, r):
        r.le("documented gap", 2.0, 1.0, known=True)
    monkeypatch.setitem(checks.CRITERIA, "c98", (98, "kernel", "failing", bad))
    monkeypatch.setitem(checks.CRITERIA, "c97", (97, "kernel", "deviating", known))
    cfg = write_cfg(tmp_path, checks=["c98"])
    assert main(["run", str(cfg), "--out", str(tmp_path / "f")]) == EXIT_FAIL
    assert main(["report", str(tmp_path / "f")]) == EXIT_FAIL
    cfg = write_cfg(tmp_path, "k.json", checks=["c97"])
    assert main(["run", str(cfg), "--out", str(tmp_path / "k")]) == EXIT_PASS
    assert json.loads((tmp_path / "k" / "summary.json").read_text())["status"] == "xfail"


def test_config_error_exit_codes(tmp_path):
    assert main(["run", str(tmp_path / "none.json")]) == EXIT_CONFIG
    assert main(["run", str(write_cfg(tmp_path, suite="nope"))]) == EXIT_CONFIG
    assert main(["sweep", str(write_cfg(tmp_path, "s.json", sweep={"N": [99]}))]) == EXIT_CONFIG
    assert main(["report", str(tmp_path / "empty")]) == EXIT_CONFIG
    (tmp_path / "empty").mkdir()
    assert main(["report", str(tmp_path / "empty")]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main(["run"]) == EXIT_CONFIG


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("NONCUTOFF_THREADS", "zero")
    assert main(["run", str(write_cfg(tmp_path, suite="kernel"))]) == EXIT_CONFIG


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "noncutoff.harness.cli", "report", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == EXIT_CONFIG and "config error" in out.stderr


def test_solver_outputs(tmp_path):
    cfg = write_cfg(tmp_path, checks=["c01"],
                    solver={"N": 4, "t_end": 0.1, "dt": 0.05, "output_every": 1,
                            "theta_nodes": 12})
    out = tmp_path / "s"
    assert main(["run", str(cfg), "--out", str(out)]) == EXIT_PASS
    rows = report.read_csv(out / "energy.csv")
    assert [float(r["times"]) for r in rows] == [0.0, 0.05, 0.1]
    coef = report.read_csv(out / "energy_coefficients.csv")
    assert len(coef) == 3 and "c0" in coef[0]
    e = json.loads((out / "energy.json").read_text())
    assert e["checks"]["conservation_ok"] and "lambda" not in e["fit"]
    assert (out / "plots" / "energy.gp").exists() and (out / "plots" / "energy.dat").exists()
    assert "solver:" in report.summarize(out)[0]


def test_small_sweep(tmp_path):
    cfg = write_cfg(tmp_path, sweep={"configs": [[2, 0.0, 0.25], [3, -1.0, 0.25]], "N": [4, 6],
                                     "theta_nodes": 12, "probe": None, "save_matrices": True})
    out = tmp_path / "sw"
    code = main(["sweep", str(cfg), "--out", str(out)])
    g = json.loads((out / "gaps.json").read_text())
    assert code == (EXIT_FAIL if g["status"] == "fail" else EXIT_PASS)
    assert {a["regime"] for a in g["assessment"]} == {"hard", "soft"}
    rows = report.read_csv(out / "gaps.csv")
    assert len(rows) == 4 and all(float(r["gap"]) > 0 for r in rows)
    npys = sorted((out / "matrices").glob("*.npy"))
    assert npys and all(p.with_suffix(".json").exists() for p in npys)
    A = np.load(npys[0])
    assert A.ndim == 2 and np.allclose(A, A.T, atol=1e-10 * np.abs(A).max())
    assert (out / "plots" / "gaps.gp").exists()


def test_plot_writer(tmp_path):
    report.write_plot(tmp_path / "p", ("x", "y"), [(1, 2.0), (2, 0.5)], "t", "x", "y", logy=True)
    gp = (tmp_path / "p.gp").read_text()
    assert '"p.dat" using 1:2' in gp and "set logscale y" in gp
    assert (tmp_path / "p.dat").read_text().splitlines()[0] == "# x y"


def test_json_cleaning(tmp_path):
    report.write_json(tmp_path / "j.json", {"a": np.float64(np.nan), "b": np.arange(2), 3: np.True_})
    d = json.loads((tmp_path / "j.json").read_text())
    assert d == {"a": "nan", "b": [0, 1], "3": True}
