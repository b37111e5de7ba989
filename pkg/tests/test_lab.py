import csv
import json
import math

import pytest

from nlmassari.domain import RegionSpec
from nlmassari.lab import ConfigError, ExperimentConfig, SweepReport, Verdict, emit, load_config, run_experiment
from nlmassari.lab.cli import main
from nlmassari.lab.config import parse_forcing, parse_region


def _write(path, text):
    path.write_text(text)
    return str(path)


@pytest.mark.parametrize("text,expected", [
    ("interval:-1,1", RegionSpec.interval(-1, 1)),
    ("halfline:0", RegionSpec.interval(0, math.inf)),
    ("leftline:0.5", RegionSpec.interval(-math.inf, 0.5)),
    ("intervals:-1,0;0.5,1", RegionSpec.intervals((-1, 0), (0.5, 1))),
    ("disk:0,0,1", RegionSpec.disk(0, 0, 1)),
])
def test_parse_region(text, expected):
    assert parse_region(text) == expected


@pytest.mark.parametrize("text", ["circle:0,0,1", "interval:1", "interval:a,b", "intervals:1,2,3"])
def test_parse_region_errors(text):
    with pytest.raises(ConfigError):
        parse_region(text)


def test_parse_forcing():
    assert parse_forcing("-0.75").is_constant
    assert parse_forcing("oscillatory:-0.75,1").label == "oscillatory"
    with pytest.raises(ConfigError):
        parse_forcing("oscillatory:1")
    with pytest.raises(ConfigError):
        parse_forcing("strong")


@pytest.mark.parametrize("changes", [
    {"experiment": "nope"}, {"M": 1.0}, {"s_list": ()}, {"s_list": (0.4, 0.3)},
    {"eps_list": (0.05, 0.1)}, {"format": "xml"}, {"profile": "/no/such/file.csv"}, {"omega": "blob:1"},
])
def test_config_validation(changes):
    with pytest.raises(ConfigError):
        ExperimentConfig(**changes)


def test_load_config_merges_sections(tmp_path):
    path = _write(tmp_path / "c.ini", "[experiment]\nname = sweep-s\n[model]\ns_list = 0.3, 0.4\nH = -0.75\n")
    cfg = load_config(path)
    assert cfg.experiment == "sweep-s" and cfg.s_list == (0.3, 0.4) and cfg.H == "-0.75"
    assert load_config(path, "minimize").experiment == "minimize"


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.ini"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path / "u.ini", "[a]\nbogus = 1\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path / "b.ini", "[a]\nm = lots\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path / "p.ini", "no section header\n"))


def _report():
    rows = [{"x": 0.1, "y": 1 / 3, "ok": True}, {"x": 0.2, "y": math.nan, "ok": False}]
    verdicts = [Verdict("a", True, 1e-9, 1e-8), Verdict("b", False, 2.0, 1.0, "note", informational=True)]
    return SweepReport("demo", ("x", "y", "ok"), rows, verdicts, {"limit": 0.5})


def test_report_passed_ignores_informational():
    rep = _report()
    assert rep.passed
    assert rep.verdict("b").informational
    with pytest.raises(KeyError):
        rep.verdict("c")
    with pytest.raises(ValueError):
        SweepReport("bad", ("x", "z"), [{"x": 1}])


def test_emit_csv(tmp_path):
    paths = emit(_report(), "csv", str(tmp_path / "sub" / "demo.csv"))
    assert [p.split("/")[-1] for p in paths] == ["demo.csv", "demo_verdicts.csv"]
    rows = list(csv.reader(open(paths[0])))
    assert rows[0] == ["x", "y", "ok"]
    assert rows[1] == ["0.10000000000000001", "0.33333333333333331", "true"]
    verdicts = list(csv.DictReader(open(paths[1])))
    assert [v["name"] for v in verdicts] == ["a", "b"]


def test_emit_json_is_strict(tmp_path):
    path = emit(_report(), "json", str(tmp_path / "demo.json"))[0]
    data = json.loads(open(path).read())
    assert data["rows"][1]["y"] is None and data["passed"] is True


def test_emit_errors(tmp_path):
    with pytest.raises(ValueError):
        emit(_report(), "xml", str(tmp_path / "x.xml"))
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="cannot write report"):
        emit(_report(), "csv", str(blocker / "demo.csv"))


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_emission_is_byte_stable(tmp_path, fmt):
    cfg = ExperimentConfig(experiment="minimize")
    a = emit(run_experiment(cfg), fmt, str(tmp_path / "a" / f"r.{fmt}"))
    b = emit(run_experiment(cfg), fmt, str(tmp_path / "b" / f"r.{fmt}"))
    for p, q in zip(a, b):
        assert open(p, "rb").read() == open(q, "rb").read()


def test_cli_pass(tmp_path, capsys):
    assert main(["minimize", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and (tmp_path / "minimize.csv").exists()


def test_cli_fail_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path / "f.ini", "[run]\ns = 0.25\neps_list = 0.1,0.05\nh = 0.02\n")
    assert main(["sweep-eps", "--config", cfg, "--out", str(tmp_path), "--format", "json"]) == 2
    assert "[FAIL]" in capsys.readouterr().out
    assert json.loads((tmp_path / "sweep-eps.json").read_text())["passed"] is False


def test_cli_error_exit_code(tmp_path, capsys):
    assert main(["minimize", "--config", str(tmp_path / "missing.ini")]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["minimize", "--jobs", "0", "--out", str(tmp_path)]) == 1


def test_cli_rejects_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_jobs_do_not_change_results(tmp_path):
    cfg = ExperimentConfig(experiment="sweep-eps", eps_list=(0.1, 0.05), h=0.02)
    assert run_experiment(cfg, 1).rows_csv() == run_experiment(cfg, 2).rows_csv()


def test_eps_rows_resum_and_verdicts_replay(tmp_path):
    cfg = ExperimentConfig(experiment="sweep-eps", eps_list=(0.1, 0.05, 0.025), h=0.02)
    rep = run_experiment(cfg)
    for row, d in zip(rep.rows, rep.details):
        assert d["gagliardo"] + d["potential"] == pytest.approx(row["F_eps"], rel=1e-14)
        assert row["F_eps"] + d["multiplier_term"] == pytest.approx(row["G_eps"], rel=1e-12)
    path = emit(rep, "csv", str(tmp_path / "eps.csv"))[0]
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["eps", "F_eps", "G_eps", "lambda", "mu", "mass_err", "l1_to_indicator"]
    mu = [float(r["mu"]) for r in rows]
    gaps = [abs(b - a) for a, b in zip(mu, mu[1:])]
    assert rep.verdict("multiplier_cauchy").passed == all(b < a for a, b in zip(gaps, gaps[1:]))


def test_symmetric_sweep_has_vanishing_multiplier():
    rep = run_experiment(ExperimentConfig(experiment="sweep-eps", m=0.0, eps_list=(0.1, 0.05), h=0.02))
    assert max(abs(v) for v in rep.column("mu")) <= 1e-6


def test_sweep_s_needs_subhalf_values():
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig(experiment="sweep-s", s_list=(0.3, 0.6)))
