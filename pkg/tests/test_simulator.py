import math

import numpy as np
import pytest

from selftrig import simulator
from selftrig.certificate import make_certificate
from selftrig.exceptions import CertificateViolation, PredictorError
from selftrig.oracle import random_system
from selftrig.plant import Feedback, LtiSystem
from selftrig.simulator import SimConfig, Trace, run, summarize


@pytest.fixture(scope="module")
def sec4_run():
    from conftest import SEC4_A, SEC4_B, SEC4_K, SEC4_P, SEC4_X0

    sys = LtiSystem(A=SEC4_A, B=SEC4_B, x0=SEC4_X0)
    fb = Feedback(K=SEC4_K)
    cert = make_certificate(sys, fb, 2.18, P=SEC4_P, w0_multiplier=1.3)
    return sys, fb, cert, run(sys, fb, cert)


def test_grid_and_flags(sec4_run):
    *_, res = sec4_run
    tr = res.trace
    assert len(tr) == 7001
    np.testing.assert_allclose(tr.t, np.arange(7001) * 1e-3, atol=1e-12)
    assert tr.event[0]
    assert tr.event.sum() == len(res.events) + 1
    assert res.ok and res.summary.status == "ok"


def test_certificate_holds_on_every_row(sec4_run):
    *_, res = sec4_run
    assert np.all(res.trace.V <= res.trace.W)


def test_event_bookkeeping(sec4_run):
    sys, fb, cert, res = sec4_run
    tr = res.trace
    prev = 0.0
    for e in res.events:
        i = int(round(e.t_k / 1e-3))
        assert tr.event[i]
        # the grid point is the floor of the predicted instant
        assert e.t_k <= e.t_predicted + 1e-12 < e.t_k + 1e-3
        assert e.inter_event == pytest.approx(e.t_k - prev, abs=1e-12)
        assert e.W_k == tr.W[i] == tr.V[i]
        np.testing.assert_allclose(tr.u[i], fb.control(tr.x[i]), rtol=1e-12)
        # control is held until the next update
        np.testing.assert_array_equal(tr.u[i + 1], tr.u[i])
        prev = e.t_k


def test_threshold_decays_between_events(sec4_run):
    _, _, cert, res = sec4_run
    tr = res.trace
    i0 = int(round(res.events[0].t_k / 1e-3))
    i1 = int(round(res.events[1].t_k / 1e-3))
    seg = tr.W[i0] * np.exp(-cert.alpha * (tr.t[i0:i1] - tr.t[i0]))
    np.testing.assert_allclose(tr.W[i0:i1], seg, rtol=1e-12)


def test_origin_never_triggers():
    sys = LtiSystem(A=[[0.0, 1.0], [0.0, 0.0]], B=[[0.0], [1.0]], x0=[0.0, 0.0])
    fb = Feedback(K=[[1.0, 1.7320508075688772]])
    cert = make_certificate(sys, fb, 0.8, w0_absolute=1.0)
    res = run(sys, fb, cert, sim=SimConfig(horizon=1.0))
    assert res.events == [] and res.ok
    res0 = run(sys, fb, make_certificate(sys, fb, 0.8), sim=SimConfig(horizon=1.0))
    assert res0.events == [] and np.all(res0.trace.x == 0.0)


def test_missed_crossing_is_reported():
    # the predictor skips a crossing that the grid check catches
    sys, fb, cert = random_system(np.random.default_rng(48860702), 3, alpha_range=(0.9375, 0.9375))
    with pytest.raises(CertificateViolation):
        run(sys, fb, cert, sim=SimConfig(horizon=3.0))
    res = run(sys, fb, cert, sim=SimConfig(horizon=3.0), check=False)
    assert res.summary.max_V_over_W > 1.0


def test_predictor_failure_truncates(sec4, monkeypatch):
    real = simulator.next_event
    calls = []

    def flaky(ctx, params, tol2=None):
        calls.append(ctx.t_k)
        if len(calls) == 3:
            raise PredictorError("boom")
        return real(ctx, params, tol2=tol2)

    monkeypatch.setattr(simulator, "next_event", flaky)
    res = run(*sec4)
    assert not res.ok
    assert res.summary.status == "predictor-failure"
    assert "boom" in res.summary.message
    assert len(res.events) == 2
    assert res.trace.t[-1] == pytest.approx(res.events[-1].t_k)


def test_summarize_settling():
    t = np.arange(5) * 1.0
    x = np.array([[1.0], [0.01], [0.2], [0.01], [0.0]])
    tr = Trace(t, x, np.zeros((5, 1)), np.ones(5), np.ones(5) * 2, np.zeros(5, bool))
    s = summarize(tr, [], 0.05)
    assert s.settling_time == 3.0
    assert s.max_V_over_W == 0.5
    assert s.event_count == 0 and s.inter_event_mean is None
    moving = Trace(t, x + 1.0, tr.u, tr.V, tr.W, tr.event)
    assert summarize(moving, [], 0.05).settling_time is None


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(T_s=0.0)
    with pytest.raises(ValueError):
        SimConfig(horizon=-1.0)
    assert SimConfig(T_s=1e-3, horizon=7.0).steps == 7000


def test_runtime_ratio_reported(sec4_run):
    *_, res = sec4_run
    ratios = res.summary.runtime_ratios
    assert len(ratios) == len(res.events)
    assert all(math.isfinite(r) and r > 0.0 for r in ratios)


def test_grid_floor_rule(sec4_run):
    *_, res = sec4_run
    for e in res.events:
        assert round(e.t_k / 1e-3) == np.floor(e.t_predicted / 1e-3)


def test_gap_positive_one_step_after_update(sec4_run):
    _, _, cert, res = sec4_run
    tr = res.trace
    for e in res.events:
        i = int(round(e.t_k / 1e-3))
        if i + 1 < len(tr):
            assert tr.W[i + 1] - tr.V[i + 1] > 0.0


def test_deterministic(sec4, sec4_run):
    *_, first = sec4_run
    again = run(*sec4)
    for name in ("t", "x", "u", "V", "W", "event"):
        np.testing.assert_array_equal(getattr(again.trace, name), getattr(first.trace, name))
    assert [e.t_predicted for e in again.events] == [e.t_predicted for e in first.events]


def test_short_horizon(sec4):
    res = run(*sec4, sim=SimConfig(horizon=0.1))
    assert len(res.trace) <= 101
    assert res.events == [] and res.ok


def test_summary_statistics(sec4_run):
    *_, res = sec4_run
    s = res.summary
    gaps = [e.inter_event for e in res.events]
    assert (s.inter_event_min, s.inter_event_max) == (min(gaps), max(gaps))
    assert s.inter_event_mean == pytest.approx(np.mean(gaps))
    assert s.max_V_over_W <= 1.0
    assert 15 <= s.event_count <= 40
    one = summarize(res.trace, res.events[:1])
    assert one.inter_event_min == one.inter_event_mean == one.inter_event_max == res.events[0].inter_event
    empty = Trace(*(np.array([]) for _ in range(6)))
    with pytest.raises(ValueError):
        summarize(empty, [])


def test_reference_settling_time(sec4_run):
    *_, res = sec4_run
    assert res.summary.settling_time is not None
    assert res.summary.settling_time <= 6.94 + 0.1


def test_asymptotic_stability_proxy(sec4_run):
    sys, _, _, res = sec4_run
    assert np.linalg.norm(res.trace.x[-1]) < 1e-2 * np.linalg.norm(sys.x0)
