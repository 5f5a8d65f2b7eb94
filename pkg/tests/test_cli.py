import json
import subprocess
import sys

import pytest

from phiconvex.cli import execute, render_json, run
from phiconvex.config import JobConfig, load_config, parse_config_text
from phiconvex.errors import ConfigError

TOP_KEYS = {"version", "command", "inputs", "results", "verdict", "grid", "wall_ms"}


def report(argv, tmp_path):
    out = tmp_path / "r.json"
    code = run([*argv, "--json", str(out), "--quiet"])
    return code, json.loads(out.read_text())


def test_hh_square_holds(tmp_path):
    code, rep = report(["hh", "--f", "x^2", "--phi", "x", "--c", "1", "--a", "0", "--b", "1"], tmp_path)
    assert code == 0
    assert rep["verdict"] == "holds"
    assert set(rep) >= TOP_KEYS
    r = rep["results"]
    for k in ("lower", "mean", "upper"):
        assert r[k] == pytest.approx(1 / 3, abs=1e-9)


def test_cube_check_violated(tmp_path):
    code, rep = report(["check", "--f", "x^3", "--c", "0", "--a", "-1", "--b", "1"], tmp_path)
    assert code == 1
    w = rep["witness"]
    assert w["slack"] <= -0.375
    assert {"x", "y", "t", "slack"} <= set(w)


def test_norm_test_max(tmp_path):
    code, rep = report(["norm-test", "--norm", "max", "--dim", "2"], tmp_path)
    assert code == 1
    assert rep["results"]["classification"] == "not_inner_product"
    assert abs(rep["witness"]["defect"]) == pytest.approx(4.0)


def test_norm_test_euclidean(tmp_path):
    code, rep = report(["norm-test", "--norm", "euclidean", "--dim", "2", "--sampler", "random"], tmp_path)
    assert code == 0
    assert rep["results"]["max_defect"] <= 1e-12


def test_bad_interval_exit_2(capsys):
    assert run(["hh", "--f", "x^2", "--c", "1", "--a", "1", "--b", "0", "--quiet"]) == 2
    assert "interval invariant" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "--f", "x +* 2", "--a", "0", "--b", "1"],
        ["check", "--f", "y", "--a", "0", "--b", "1"],
        ["product", "--f", "x - 0.5", "--c", "0", "--a", "0", "--b", "1"],
        ["hh", "--f", "x^2", "--phi", "0.5", "--c", "0", "--a", "0", "--b", "1"],
        ["check", "--f", "log(x)", "--c", "0", "--a", "-1", "--b", "1"],
        ["frobnicate"],
        ["check", "--c", "minus"],
    ],
)
def test_errors_exit_2(argv):
    assert run([*argv, "--quiet"]) == 2


def test_estimate_mode(tmp_path):
    code, rep = report(["modulus", "--f", "x^4", "--a", "1", "--b", "2"], tmp_path)
    assert code == 0
    assert rep["results"]["c_star"] == pytest.approx(6.0, abs=1e-2)


def test_modulus_negative_exit_1(tmp_path):
    code, rep = report(["modulus", "--f", "x^3", "--a", "-1", "--b", "1"], tmp_path)
    assert code == 1 and rep["results"]["c_star"] < 0


def test_product_and_pair(tmp_path):
    code, rep = report(["product", "--f", "x^2", "--c", "1", "--a", "0", "--b", "1"], tmp_path)
    assert code == 0 and rep["results"]["lhs"] == pytest.approx(1 / 30, abs=1e-9)
    code, rep = report(["pair-product", "--f", "x^2", "--g", "x^2", "--c", "1", "--a", "0", "--b", "1"], tmp_path)
    assert code == 0 and rep["results"]["rhs"] == pytest.approx(0.2, abs=1e-9)


def test_hh_hypothesis_failure_is_violation(tmp_path):
    # 2 exceeds the modulus of x^2, so the precheck fails
    code, rep = report(["hh", "--f", "x^2", "--c", "2", "--a", "0", "--b", "1"], tmp_path)
    assert code == 1
    assert rep["results"]["hypothesis"]["f"]["holds"] is False


def test_counterexample_and_shift_identity(tmp_path):
    code, rep = report(["counterexample", "--norm", "max", "--dim", "2", "--c", "1"], tmp_path)
    assert code == 1 and rep["witness"]["slack"] <= -0.5
    assert rep["results"]["evaluations"] <= 100_000
    code, rep = report(["lemma2", "--f", "x1^2 + x2^2", "--dim", "2", "--c", "1", "--grid", "9"], tmp_path)
    assert code == 0 and rep["results"]["max_defect"] <= 1e-10


def test_sqnorm_check(tmp_path):
    code, rep = report(["sqnorm-check", "--norm", "max", "--dim", "2", "--c", "1", "--grid", "9"], tmp_path)
    assert code == 1


# ---------------------------------------------------------------------------
# config files


def test_config_defaults():
    cfg = JobConfig(command="check", f="x^2", a=(0.0,), b=(1.0,))
    assert cfg.c == "estimate" and cfg.t_steps == 21 and cfg.refine == 3
    assert cfg.resolved_grid == 41 and cfg.resolved_dim == 1
    cfg2 = JobConfig(command="norm-test")
    assert cfg2.resolved_dim == 2 and cfg2.resolved_grid == 17


def test_config_file_parsing(tmp_path):
    path = tmp_path / "job.cfg"
    path.write_text(
        "# job\ncommand = hh\nf = \"x^2\"\nphi = x\nc = 1\na = 0\nb = 1\nquad-tol = 1e-11  # tight\n"
    )
    cfg = load_config(path)
    assert cfg.f == "x^2" and cfg.phi == ("x",) and cfg.c == 1.0 and cfg.quad_tol == 1e-11


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config_text("nonsense")
    with pytest.raises(ConfigError):
        parse_config_text("colour = red")
    with pytest.raises(ConfigError):
        parse_config_text("grid = many")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        JobConfig(command="check", f="x^2", a=(0.0,), b=(1.0,), c=-1.0)


def test_flags_beat_file(tmp_path):
    path = tmp_path / "job.cfg"
    path.write_text("f = x^2\nc = 1.5\na = 0\nb = 1\ngrid = 11\nrefine = 0\n")
    _, from_file = report(["check", "--config", str(path)], tmp_path)
    assert from_file["verdict"] == "violated" and from_file["inputs"]["c"] == 1.5
    _, flagged = report(["check", "--config", str(path), "--c", "1"], tmp_path)
    assert flagged["verdict"] == "holds" and flagged["inputs"]["c"] == 1.0
    assert flagged["inputs"]["grid"] == 11


def test_config_command_mismatch(tmp_path):
    path = tmp_path / "job.cfg"
    path.write_text("command = hh\nf = x^2\na = 0\nb = 1\n")
    assert run(["check", "--config", str(path), "--quiet"]) == 2


# ---------------------------------------------------------------------------
# report format


def strip_wall(text):
    rep = json.loads(text)
    rep.pop("wall_ms")
    return json.dumps(rep, sort_keys=True)


@pytest.mark.parametrize(
    "cfg",
    [
        JobConfig(command="check", f="x^3", c=0.0, a=(-1.0,), b=(1.0,)),
        JobConfig(command="norm-test", norm="max", sampler="random", seed=4),
        JobConfig(command="lemma2", f="x1^2 + x2", dim=2, c=1.0, grid=7, seed=2),
    ],
)
def test_determinism_and_round_trip(cfg):
    code1, rep1 = execute(cfg)
    code2, rep2 = execute(cfg)
    assert code1 == code2
    t1, t2 = render_json(rep1), render_json(rep2)
    assert strip_wall(t1) == strip_wall(t2)
    assert json.loads(t1) == rep1


def test_error_report_shape():
    code, rep = execute(JobConfig(command="product", f="x - 0.5", c=0.0, a=(0.0,), b=(1.0,)))
    assert code == 2 and rep["verdict"] == "error" and "negative" in rep["error"]


def test_json_to_stdout(capsys):
    assert run(["hh", "--f", "exp(x)", "--c", "0", "--a", "0", "--b", "1", "--json", "-"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["results"]["mean"] == pytest.approx(1.718281828459045, abs=1e-9)


def test_table_output(capsys):
    assert run(["hh", "--f", "x^2", "--c", "1", "--a", "0", "--b", "1"]) == 0
    out = capsys.readouterr().out
    assert "verdict: holds" in out and "mean" in out


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "phiconvex.cli", "norm-test", "--norm", "max", "--quiet"],
        capture_output=True, text=True,
    )  # fmt: skip
    assert proc.returncode == 1
