import json

import pytest

from attnalloc import cli
from attnalloc.errors import ParseError, ValidationError

MILD = ["--lambda", "1", "--rho", "0", "--uRR", "1", "--uLL", ".9", "--uLR", "-.9", "--uRL", "-.9",
        "--c", ".3"]
SKEW = ["--lambda", "1", "--rho", "0", "--uRR", "1", "--uLL", ".8", "--uLR", "-1", "--uRL", "-.8"]


def _run(tmp_path, *args):
    rc = cli.main([*args, "--out", str(tmp_path)])
    return rc


def _header(text):
    return dict(ln[2:].split("=", 1) for ln in text.splitlines() if ln.startswith("# "))


def test_flags_parse():
    cmd, cfg = cli.parse_config(["solve", *MILD])
    assert cmd == "solve"
    assert cfg.params.u_l_L == 0.9 and cfg.params.c == 0.3 and cfg.variant == "baseline"


def test_missing_key_named():
    with pytest.raises(ParseError) as e:
        cli.parse_config(["solve", *MILD[:-2]])
    assert e.value.key == "c"


def test_negative_cost_rejected():
    with pytest.raises(ValidationError) as e:
        cli.parse_config(["solve", *SKEW, "--c", "-1"])
    assert "c >= 0" in e.value.violations


def test_unknown_file_key_reports_line(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("lambda=1\nrho=0\nbogus=2\n")
    with pytest.raises(ParseError) as e:
        cli.parse_config(["solve", "--config", str(f)])
    assert e.value.key == "bogus" and e.value.line == 3


def test_flags_override_file(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("lambda=1\nrho=0\nuRR=1\nuLL=.8\nuLR=-1\nuRL=-.8\nc=.3\n")
    _, cfg = cli.parse_config(["solve", "--config", str(f), "--c", ".13"])
    assert cfg.params.c == 0.13 and cfg.params.u_l_L == 0.8


def test_json_config(tmp_path):
    f = tmp_path / "run.json"
    f.write_text(json.dumps({"lambda": 1, "rho": 0, "uRR": 1, "uLL": 0.8, "uLR": -1,
                             "uRL": -0.8, "c": 0.13, "grid": 5}))
    _, cfg = cli.parse_config(["solve", "--config", str(f)])
    assert cfg.params.c == 0.13 and cfg.get("grid") == 5


def test_variant_keys_present_iff_required():
    with pytest.raises(ParseError):
        cli.parse_config(["solve", *SKEW, "--c", ".1", "--variant", "nonexclusive"])
    with pytest.raises(ValidationError):
        cli.parse_config(["solve", *SKEW, "--c", ".1", "--alpha_max", ".8"])
    _, cfg = cli.parse_config(["solve", *SKEW, "--c", ".1", "--variant", "nonexclusive",
                               "--alpha_max", ".8"])
    assert cfg.variant_keys["alpha_max"] == 0.8


def test_exit_codes(tmp_path, monkeypatch):
    assert _run(tmp_path, "solve", *SKEW, "--c", ".3") == 0
    assert _run(tmp_path, "solve", *SKEW, "--c", "-1") == 2
    assert _run(tmp_path, "solve", *SKEW) == 2

    def boom(cfg):
        raise FloatingPointError("overflow")
    monkeypatch.setitem(cli.HANDLERS, "solve", boom)
    assert _run(tmp_path, "solve", *SKEW, "--c", ".3") == 3


def test_solve_header_reports_regime(tmp_path):
    _run(tmp_path, "solve", *SKEW, "--c", ".3", "--grid", "11")
    text = (tmp_path / "solve.csv").read_text()
    h = _header(text)
    assert h["regime"] == "OwnOnly"
    assert float(h["c_bar"]) == pytest.approx(0.8 / 0.9, abs=1e-15)
    assert "p,V,alpha,branch" in text.splitlines()


def test_twoperiod_thresholds(tmp_path):
    _run(tmp_path, "twoperiod", "--lambda", ".85", "--rho", "0", "--uRR", "1", "--uLL", "1",
         "--uLR", "-1", "--uRL", "-1", "--c", ".125")
    rows = [ln.split(",") for ln in (tmp_path / "twoperiod.csv").read_text().splitlines()
            if not ln.startswith("#")][1:]
    got = {k: float(v) for k, v in rows}
    assert got["experiment_low"] == pytest.approx(0.07, abs=0.01)
    assert got["own_low_upper"] == pytest.approx(0.27, abs=0.01)
    assert got["own_high_lower"] == pytest.approx(0.73, abs=0.01)
    assert got["experiment_high"] == pytest.approx(0.93, abs=0.01)


def test_sweep_over_cost(tmp_path):
    _run(tmp_path, "sweep", *SKEW, "--c", ".3", "--sweep_key", "c", "--sweep_values", ".05:.6:6")
    lines = [ln for ln in (tmp_path / "sweep.csv").read_text().splitlines() if not ln.startswith("#")]
    rows = [dict(zip(lines[0].split(","), ln.split(","))) for ln in lines[1:]]
    assert len({r["c_bar"] for r in rows}) == 1
    regimes = [r["regime"] for r in rows]
    assert regimes[0] == "OwnAndOpposite" and regimes[-1] == "OwnOnly"


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        cli.main(["simulate", *SKEW, "--c", ".13", "--n_paths", "500", "--seed", "3",
                  "--per_path", "true", "--out", str(d)])
    for name in ("simulate.json", "paths.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_json_round_trip(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["solve", *SKEW, "--c", ".13", "--grid", "21", "--format", "json", "--out", str(a)])
    first = json.loads((a / "solve.json").read_text())
    cli.main(["solve", "--config", str(a / "solve.json"), "--format", "json", "--out", str(b)])
    second = json.loads((b / "solve.json").read_text())
    assert first["rows"] == second["rows"]
    assert first["header"] == second["header"]


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
    assert cli.main(["solve", *SKEW, "--c", ".3", "--grid", "5"]) == 0
    assert (tmp_path / "solve.csv").exists()


@pytest.mark.parametrize("command,extra,files", [
    ("solve", [], ["solve.csv"]),
    ("oracle", ["--dt", ".01", "--grid", "201"], ["oracle.csv"]),
    ("simulate", ["--n_paths", "200"], ["simulate.json"]),
    ("population", ["--grid", "101"], ["population.csv", "population_summary.csv"]),
    ("sweep", ["--sweep_key", "rho", "--sweep_values", "0,.1,.2"], ["sweep.csv"]),
    ("diagnose", ["--grid", "51"], ["diagnose.csv"]),
    ("twoperiod", [], ["twoperiod.csv"]),
])
def test_every_command_runs(tmp_path, command, extra, files):
    assert _run(tmp_path, command, *SKEW, "--c", ".13", *extra) == 0
    for f in files:
        assert (tmp_path / f).stat().st_size > 0


@pytest.mark.parametrize("variant,extra", [
    ("nonexclusive", ["--alpha_max", ".8"]),
    ("asymmetric", ["--lambda_R", "1", "--lambda_L", ".6"]),
    ("multiaction", ["--m_R", ".2", "--m_L", ".2"]),
])
def test_variants_solve(tmp_path, variant, extra):
    assert _run(tmp_path, "solve", *SKEW, "--c", ".1", "--variant", variant, *extra) == 0


def test_gamma_variant_solve(tmp_path):
    args = ["--lambda", "1", "--rho", "0", "--uRR", "1", "--uLL", "1", "--uLR", "0", "--uRL", "0"]
    assert _run(tmp_path, "solve", *args, "--c", ".1", "--variant", "gamma", "--frontier", "sqrt") == 0
    assert _run(tmp_path, "simulate", *args, "--c", ".1", "--variant", "gamma", "--frontier", "sqrt") == 2
