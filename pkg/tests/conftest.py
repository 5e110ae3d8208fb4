from pathlib import Path

import numpy as np
import pytest

from selftrig.certificate import build_derivative_matrices, make_certificate
from selftrig.plant import Feedback, LtiSystem, build_closed_loop
from selftrig.predictor import PredictionContext

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SEC4_A = [[1, 1, 0], [-2, 0, 4], [5, 4, -7]]
SEC4_B = [[-1], [0], [1]]
SEC4_X0 = [-2, 3, 5]
SEC4_K = [[8.38, 26.36, 10.38]]
SEC4_P = [[275.7, 1025.5, 577.9], [1025.5, 3840.1, 2173.5], [577.9, 2173.5, 1234.1]]
SEC4_ALPHA = 2.18

ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def sec4():
    """Third-order benchmark with its two-decimal gain and weight."""
    sys = LtiSystem(A=SEC4_A, B=SEC4_B, x0=SEC4_X0)
    fb = Feedback(K=SEC4_K)
    cert = make_certificate(sys, fb, SEC4_ALPHA, P=SEC4_P, w0_multiplier=1.3)
    return sys, fb, cert


@pytest.fixture
def sec4_ctx(sec4):
    sys, fb, cert = sec4
    dyn = build_closed_loop(sys, fb)
    derivs = build_derivative_matrices(sys, fb, cert.P)
    return PredictionContext.at_event(dyn, cert, derivs, sys.x0, 0.0, cert.W0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_report(request):
    """Collects ``(criterion, ok, detail)`` lines printed at session end."""
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(lines, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
