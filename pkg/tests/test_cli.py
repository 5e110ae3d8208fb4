import csv
import json

import numpy as np
import pytest

from conftest import CONFIGS
from selftrig import cli
from selftrig.config import load_config, parse_config
from selftrig.exceptions import ConfigError, PredictorError
from selftrig.oracle import random_system
from selftrig.output import read_trace_csv, write_trace_csv
from selftrig.simulator import SimConfig, run


def sec4_raw():
    return json.loads((CONFIGS / "paper_sec4.json").read_text())


def write(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda r: r.pop("system"), "system"),
        (lambda r: r["system"].pop("x0"), "system.x0"),
        (lambda r: r["system"].update(Q=1), "system"),
        (lambda r: r["system"].update(x0=[1, 2]), "system"),
        (lambda r: r["feedback"].update(K=[[1, 2]]), "feedback.K"),
        (lambda r: r["certificate"].update(w0_absolute=1e6), "certificate"),
        (lambda r: r["certificate"].update(alpha=3.0), "certificate"),
        (lambda r: r["solver"].update(beta=1.5), "solver"),
        (lambda r: r["sim"].update(T_s=0), "sim"),
        (lambda r: r["output"].update(formats=["xml"]), "output.formats"),
        (lambda r: r.update(scalar={"c": 1}), "scalar"),
    ],
)
def test_config_errors_name_the_field(mutate, field):
    raw = sec4_raw()
    mutate(raw)
    with pytest.raises(ConfigError, match=f"^{field}"):
        load_config(raw)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="malformed JSON"):
        parse_config(bad)


def test_shipped_configs_load():
    for path in CONFIGS.glob("*.json"):
        cfg = parse_config(path)
        assert cfg.source == str(path)
    cfg = parse_config(CONFIGS / "paper_sec4.json")
    assert cfg.cert.W0 == pytest.approx(1.3 * 107857.2, abs=0.1)
    assert cfg.params.tol2_base == 1e-5


def test_trace_csv_round_trip(tmp_path, sec4):
    res = run(*sec4, sim=SimConfig(horizon=0.5))
    write_trace_csv(tmp_path / "t.csv", res.trace)
    back = read_trace_csv(tmp_path / "t.csv")
    for name in ("t", "x", "u", "V", "W", "event"):
        np.testing.assert_array_equal(getattr(back, name), getattr(res.trace, name))


def test_simulate_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["simulate", str(CONFIGS / "paper_sec4.json"), "--out", str(out)]) == 0
    with open(out / "trace.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["t", "x_1", "x_2", "x_3", "u_1", "V", "W", "event"]
    with open(out / "events.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "t_k", "t_predicted", "inter_event", "W_k", "runtime_s"]
    assert float(rows[1][1]) == pytest.approx(0.453)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "ok"
    assert summary["event_count"] == len(rows) - 1
    assert len(summary["runtime_over_inter_event"]) == summary["event_count"]
    assert "events: " in capsys.readouterr().out


def test_quiet_suppresses_output(tmp_path, capsys):
    assert cli.main(["simulate", str(CONFIGS / "scalar.json"), "--out", str(tmp_path), "--quiet"]) == 0
    assert capsys.readouterr().out == ""


def test_predict(capsys):
    assert cli.main(["predict", str(CONFIGS / "paper_sec4.json")]) == 0
    out = capsys.readouterr().out
    assert "t_next   0.4538" in out and "forward" in out and "tol2     1e-05" in out


def test_predict_from_state(capsys):
    assert cli.main(["predict", str(CONFIGS / "paper_sec4.json"), "--t0", "1.0", "--state", "0.1,0.2,-0.3"]) == 0
    assert "t_k      1" in capsys.readouterr().out
    assert cli.main(["predict", str(CONFIGS / "paper_sec4.json"), "--state", "1,2"]) == 2
    assert cli.main(["predict", str(CONFIGS / "paper_sec4.json"), "--state", "0,0,0", "--t0", "1"]) == 0


def test_verify_and_scalar(capsys):
    assert cli.main(["verify", str(CONFIGS / "scalar.json")]) == 0
    assert "rho analytic" in capsys.readouterr().out
    assert cli.main(["scalar", str(CONFIGS / "scalar.json")]) == 0
    out = capsys.readouterr().out
    assert "gain case a>0" in out
    assert cli.main(["scalar", str(CONFIGS / "paper_sec4.json")]) == 2


def test_verify_mismatch_exit_code(monkeypatch):
    real = cli.compare_with_oracle

    def skewed(*args, **kwargs):
        rows = real(*args, **kwargs)
        return [r.__class__(**{**r.__dict__, "delta": 1e-3}) for r in rows]

    monkeypatch.setattr(cli, "compare_with_oracle", skewed)
    assert cli.main(["verify", str(CONFIGS / "paper_sec4.json"), "--quiet"]) == 5


def test_config_error_exit_code(tmp_path, capsys):
    raw = sec4_raw()
    raw["certificate"]["alpha"] = -1
    assert cli.main(["simulate", write(tmp_path, raw)]) == 2
    assert "certificate" in capsys.readouterr().err


def test_certificate_violation_exit_code(tmp_path):
    sys, fb, cert = random_system(np.random.default_rng(48860702), 3, alpha_range=(0.9375, 0.9375))
    raw = {
        "system": {"A": sys.A.tolist(), "B": sys.B.tolist(), "x0": sys.x0.tolist()},
        "feedback": {"K": fb.K.tolist()},
        "certificate": {"alpha": cert.alpha, "w0_multiplier": 1.0, "P": cert.P.tolist()},
        "sim": {"horizon": 3.0},
    }
    assert cli.main(["simulate", write(tmp_path, raw), "--out", str(tmp_path), "--quiet"]) == 3


def test_predictor_failure_exit_code(tmp_path, monkeypatch):
    from selftrig import simulator

    def broken(*args, **kwargs):
        raise PredictorError("no bracket")

    monkeypatch.setattr(simulator, "next_event", broken)
    out = tmp_path / "fail"
    assert cli.main(["simulate", str(CONFIGS / "paper_sec4.json"), "--out", str(out), "--quiet"]) == 4
    assert json.loads((out / "summary.json").read_text())["status"] == "predictor-failure"


def test_log_level_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("SELFTRIG_LOG", "debug")
    assert cli.main(["predict", str(CONFIGS / "paper_sec4.json"), "--quiet"]) == 0


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "selftrig", "predict", str(CONFIGS / "paper_sec4.json")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and "rho_k" in proc.stdout


def test_defaults_and_named_range_error():
    raw = sec4_raw()
    raw.pop("solver")
    cfg = load_config(raw)
    assert (cfg.params.max_iter, cfg.params.beta, cfg.params.kappa2) == (50, 0.35, 0.25)
    raw["solver"] = {"beta": 1.5}
    with pytest.raises(ConfigError, match=r"beta ∈ \(0,1\)"):
        load_config(raw)


def test_benchmark_config_contents():
    cfg = parse_config(CONFIGS / "paper_sec4.json")
    assert cfg.cert.alpha == 2.18
    assert (cfg.sim.T_s, cfg.sim.horizon) == (1e-3, 7.0)
    np.testing.assert_array_equal(cfg.sys.x0, [-2, 3, 5])
    np.testing.assert_array_equal(cfg.fb.K, [[8.38, 26.36, 10.38]])


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["simulate", str(CONFIGS / "scalar.json"), "--out", str(blocker / "sub"), "--quiet"]) == 2


def test_predict_scalar_matches_closed_form(capsys):
    import math

    assert cli.main(["predict", str(CONFIGS / "scalar.json")]) == 0
    line = next(l for l in capsys.readouterr().out.splitlines() if l.startswith("rho_k"))
    assert float(line.split()[1]) == pytest.approx(math.log(1.5), abs=1e-5)


def test_verify_seeded_suite_is_reproducible(capsys):
    assert cli.main(["verify", str(CONFIGS / "scalar.json"), "--seed", "11", "--events", "2", "--grid", "1e-5"]) == 0
    first = [l for l in capsys.readouterr().out.splitlines() if l.startswith("random")]
    assert cli.main(["verify", str(CONFIGS / "scalar.json"), "--seed", "11", "--events", "2", "--grid", "1e-5"]) == 0
    second = [l for l in capsys.readouterr().out.splitlines() if l.startswith("random")]
    assert len(first) == 21 and first == second
