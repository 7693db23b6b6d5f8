import json
import math
import subprocess
import sys

import numpy as np
import pytest

from cirlab import cli, cir
from cirlab.cli import ResultRecord, read_records


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def default_profile(tmp_path_factory):
    path = tmp_path_factory.mktemp("prof") / "profile.csv"
    assert cli.main(["profile", "--out", str(path)]) == 0
    return read_records(path.read_text(), "csv")


def test_profile_default_shape(default_profile):
    recs = default_profile
    assert len(recs) == 33
    assert [r.t_or_r for r in recs] == pytest.approx(np.arange(-4, 4.001, 0.25))
    assert recs[0].eps == "0.1,0.03,0.01,0.003"
    assert all(r.method == "closed-form" for r in recs)
    assert set(recs[0].extra) >= {"emp_eps=0.003", "err_eps=0.003", "emp_eps=0.1"}


def test_profile_default_values(default_profile):
    mid = [r for r in default_profile if r.t_or_r == 0.0][0]
    assert mid.value == pytest.approx(math.erf(0.5), abs=1e-15)
    assert abs(mid.extra["emp_eps=0.003"] - mid.value) <= 0.02
    # eps = 0.1 cannot reach r = -4 (t <= 0): reported as NaN
    first = default_profile[0]
    assert math.isnan(first.extra["emp_eps=0.1"])


def test_profile_workers_deterministic(tmp_path):
    args = ["profile", "--eps-grid", "0.1,0.01", "--r-min", "-1", "--r-max", "1", "--r-step", "0.5"]
    assert cli.main(args + ["--out", str(tmp_path / "one.csv")]) == 0
    assert cli.main(args + ["--workers", "3", "--out", str(tmp_path / "three.csv")]) == 0
    one = read_records((tmp_path / "one.csv").read_text(), "csv")
    three = read_records((tmp_path / "three.csv").read_text(), "csv")
    strip = lambda rs: [(r.t_or_r, r.value, r.extra) for r in rs]
    assert strip(one) == strip(three)


def test_profile_wp_lower_column(capsys):
    code, out, _ = run(["profile", "--dist", "wp", "--p", "0.5", "--eps-grid", "0.01",
                        "--r-min", "0", "--r-max", "0", "--format", "json"], capsys)
    assert code == 0
    rec = read_records(out, "json")[0]
    assert rec.extra["lower"] <= rec.value


def test_distance_time_zero(capsys):
    code, out, _ = run(["distance", "--t", "0", "--x", "2"], capsys)
    assert code == 0
    rec = read_records(out, "csv")[0]
    assert rec.value == 1.0


def test_distance_cross_check(capsys):
    code, out, _ = run(["distance", "--t", "3", "--eps", "0.1", "--cross-check", "--format", "json"], capsys)
    assert code == 0
    rec = read_records(out, "json")[0]
    assert rec.extra["route_gap"] == pytest.approx(abs(rec.extra["density_value"] - rec.extra["fourier_value"]))
    assert rec.extra["routes_agree"] in (True, "True", "true")


def test_distance_wp(capsys):
    code, out, _ = run(["distance", "--dist", "wp", "--t", "5", "--format", "json"], capsys)
    assert code == 0
    rec = read_records(out, "json")[0]
    assert rec.extra["renormalized"] == pytest.approx(rec.value / 0.01)


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_records_roundtrip_bit_for_bit(fmt, capsys):
    code, out, _ = run(["distance", "--t", "4.321", "--eps", "0.03", "--cross-check", "--format", fmt], capsys)
    assert code == 0
    rec = read_records(out, fmt)[0]
    text = cli.rows_to_json([rec.as_row()]) if fmt == "json" else cli.rows_to_csv([rec.as_row()])
    assert text == out
    again = read_records(text, fmt)[0]
    for k, v in again.as_row().items():
        w = rec.as_row()[k]
        assert v == w or (isinstance(v, float) and math.isnan(v) and math.isnan(w)), k


def test_number_format_roundtrip():
    for v in (0.1, 1 / 3, 5e-324, 1.7976931348623157e308, -0.0, math.pi * 1e-200):
        assert cli._parse_number(cli.fmt_number(v)) == v
    assert math.isnan(cli._parse_number(cli.fmt_number(float("nan"))))
    assert cli._parse_number(cli.fmt_number(float("-inf"))) == float("-inf")


def test_mixing_time(capsys):
    code, out, _ = run(["mixing-time", "--b", "2", "--x", "4", "--eta", "0.25", "--format", "json"], capsys)
    assert code == 0
    numeric, asym = read_records(out, "json")
    assert numeric.method == "numeric-bracketed"
    assert asym.method == "asymptotic-profile"
    assert asym.value == pytest.approx(5.7487, abs=5e-4)
    assert abs(numeric.extra["gap_omega"]) <= 0.05


def test_mixing_time_no_cutoff(capsys):
    code, out, err = run(["mixing-time", "--x", "1", "--format", "json"], capsys)
    assert code == 0
    recs = read_records(out, "json")
    assert any(r.method == "no-cutoff" for r in recs)
    assert "cutoff" in err


def test_simulate_reproducible(tmp_path, capsys):
    args = ["simulate", "--t", "1", "--n", "2000", "--eps", "0.3", "--seed", "7"]
    assert cli.main(args + ["--out", str(tmp_path / "a.txt")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b.txt")]) == 0
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert cli.main(["simulate", "--t", "1", "--n", "2000", "--eps", "0.3", "--seed", "8",
                     "--out", str(tmp_path / "c.txt")]) == 0
    assert (tmp_path / "a.txt").read_bytes() != (tmp_path / "c.txt").read_bytes()
    summary = json.loads((tmp_path / "a.txt.summary.json").read_text())[0]
    assert summary["seed"] == 7 and summary["n"] == 2000


def test_simulate_exact_mean(tmp_path):
    assert cli.main(["simulate", "--t", "0.5", "--n", "1000000", "--eps", "0.5", "--out", str(tmp_path / "s.txt")]) == 0
    s = json.loads((tmp_path / "s.txt.summary.json").read_text())[0]
    assert abs(s["mean_z"]) <= 5
    assert abs(s["empirical_mean"] - s["analytic_mean"]) <= 5 * math.sqrt(s["analytic_var"] / 1e6)


def test_simulate_euler_close_to_exact(tmp_path):
    common = ["simulate", "--t", "1", "--n", "20000", "--eps", "0.3"]
    assert cli.main(common + ["--scheme", "euler", "--dt", "0.001", "--out", str(tmp_path / "e.txt")]) == 0
    s = json.loads((tmp_path / "e.txt.summary.json").read_text())[0]
    assert abs(s["mean_z"]) <= 5
    assert s["ks_statistic"] <= 0.03


def test_out_dir_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path))
    assert cli.main(["distance", "--t", "1", "--out", "sub/d.csv"]) == 0
    assert (tmp_path / "sub" / "d.csv").exists()
    assert capsys.readouterr().out == ""


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"eps": 0.1, "x": 3.0, "t": 2.0}))
    code, out, _ = run(["distance", "--config", str(cfg), "--x", "2.5"], capsys)
    assert code == 0
    rec = read_records(out, "csv")[0]
    assert (rec.eps, rec.x, rec.t_or_r) == (0.1, 2.5, 2.0)
    echoed = json.loads(rec.config)
    assert echoed["x"] == 2.5 and echoed["eps"] == 0.1


def test_validate_only_filter(capsys):
    code, _, err = run(["validate", "--only", "tv-engine"], capsys)
    assert code == 0
    lines = [l for l in err.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert lines and all(" tv-engine " in l for l in lines)


def test_validate_report(tmp_path, capsys):
    path = tmp_path / "r.json"
    code, _, _ = run(["validate", "--only", "erf-odd,symmetry", "--format", "json", "--out", str(path)], capsys)
    assert code == 0
    rows = json.loads(path.read_text())
    assert {r["name"] for r in rows} == {"erf-odd", "symmetry"}


@pytest.mark.parametrize("argv", [
    ["distance", "--t", "1", "--eps", "2"],  # violates the Feller gate
    ["distance", "--t", "-1"],
    ["simulate"],
    ["validate", "--only", "no-such-check"],
    ["profile", "--eps-grid", "0.1,abc"],
    ["mixing-time", "--eta", "1.5"],
])
def test_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert "error" in err


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "cirlab.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("profile", "distance", "mixing-time", "simulate", "validate"):
        assert cmd in res.stdout
