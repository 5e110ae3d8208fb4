"""
Sampled closed-loop simulation driven by the event predictor.

The plant advances on a fixed grid of step ``T_s`` using the exact
transition ``exp(Psi T_s)``. Control can only change on the grid, so each
predicted update instant is floored to the grid point at or before it. At an
applied update the control is recomputed, the error block is reset and the
threshold restarts from the current value of ``V``.
"""

from dataclasses import dataclass, field
import logging
import math
import time

import numpy as np

from .certificate import build_derivative_matrices
from .exceptions import CertificateViolation, PredictorError
from .plant import build_closed_loop
from .predictor import PredictionContext, SolverParams, dynamic_tol2, next_event

__all__ = ["SimConfig", "EventRecord", "Trace", "Summary", "SimulationResult", "run", "summarize"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    T_s: float = 1e-3
    horizon: float = 7.0
    settle_threshold: float = 0.05

    def __post_init__(self):
        if not self.T_s > 0.0:
            raise ValueError("T_s must be positive")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        if not self.settle_threshold > 0.0:
            raise ValueError("settle_threshold must be positive")

    @property
    def steps(self):
        return int(round(self.horizon / self.T_s))


@dataclass(frozen=True)
class EventRecord:
    """One applied control update (``k >= 1``; the update at t0 is implicit)."""

    k: int
    t_k: float
    t_predicted: float
    inter_event: float
    W_k: float
    predictor_runtime: float
    rho_k: float = math.nan
    branch: str = ""
    tol2: float = math.nan

    @property
    def runtime_ratio(self):
        return float(self.predictor_runtime / self.inter_event)


@dataclass
class Trace:
    """Per-grid-point history. ``event[i]`` marks rows where u was refreshed."""

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    V: np.ndarray
    W: np.ndarray
    event: np.ndarray

    def __len__(self):
        return self.t.size


@dataclass
class Summary:
    settling_time: float
    event_count: int
    lambda_max: float
    inter_event_min: float
    inter_event_mean: float
    inter_event_max: float
    max_V_over_W: float
    runtime_ratio_max: float
    runtime_ratios: list = field(default_factory=list)
    status: str = "ok"
    message: str = ""

    def to_dict(self):
        return {
            "settling_time_s": self.settling_time,
            "event_count": self.event_count,
            "lambda_max": self.lambda_max,
            "inter_event_min_s": self.inter_event_min,
            "inter_event_mean_s": self.inter_event_mean,
            "inter_event_max_s": self.inter_event_max,
            "max_V_over_W": self.max_V_over_W,
            "runtime_over_inter_event_max": self.runtime_ratio_max,
            "runtime_over_inter_event": list(self.runtime_ratios),
            "status": self.status,
            "message": self.message,
        }


@dataclass
class SimulationResult:
    trace: Trace
    events: list
    summary: Summary

    @property
    def ok(self):
        return self.summary.status == "ok"


def summarize(trace, events, settle_threshold=0.05, lambda_max=math.nan, status="ok", message=""):
    """Aggregate statistics of a finished run.

    The settling time is the first grid time from which ``||x||`` stays
    below `settle_threshold` until the end of the trace, or None if the last
    row is still above it.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    norms = np.linalg.norm(trace.x, axis=1)
    above = np.nonzero(norms >= settle_threshold)[0]
    if above.size == 0:
        settling = float(trace.t[0])
    elif above[-1] == len(trace) - 1:
        settling = None
    else:
        settling = float(trace.t[above[-1] + 1])

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(trace.W > 0.0, trace.V / trace.W, np.where(trace.V > 0.0, np.inf, 0.0))
    gaps = np.array([e.inter_event for e in events])
    ratios = [e.runtime_ratio for e in events]
    return Summary(
        settling_time=settling,
        event_count=len(events),
        lambda_max=float(lambda_max),
        inter_event_min=float(gaps.min()) if gaps.size else None,
        inter_event_mean=float(gaps.mean()) if gaps.size else None,
        inter_event_max=float(gaps.max()) if gaps.size else None,
        max_V_over_W=float(ratio.max()),
        runtime_ratio_max=max(ratios) if ratios else None,
        runtime_ratios=ratios,
        status=status,
        message=message,
    )


def run(sys, fb, cert, params=SolverParams(), sim=SimConfig(), check=True):
    """Simulate the self-triggered loop from ``t = 0`` to ``sim.horizon``.

    Parameters
    ----------
    sys : LtiSystem
    fb : Feedback
    cert : PlfCertificate
    params : SolverParams
    sim : SimConfig
    check : bool
        Raise :class:`CertificateViolation` as soon as ``V > W`` on a grid
        point.

    Returns
    -------
    SimulationResult
        If the predictor fails the trace stops at the last applied update
        and ``summary.status`` is ``"predictor-failure"``.
    """
    dyn = build_closed_loop(sys, fb)
    derivs = build_derivative_matrices(sys, fb, cert.P)
    n, m = sys.n, sys.m
    Ts = sim.T_s
    N = sim.steps
    step = dyn.transition(Ts)
    P = cert.P

    t = np.arange(N + 1) * Ts
    X = np.zeros((N + 1, n))
    U = np.zeros((N + 1, m))
    V = np.zeros(N + 1)
    W = np.zeros(N + 1)
    flag = np.zeros(N + 1, dtype=bool)

    xi = np.concatenate([sys.x0, np.zeros(n)])
    k_idx = 0
    W_k = cert.W0
    u = fb.control(sys.x0)
    events = []
    status, message = "ok", ""

    X[0], U[0], V[0], W[0], flag[0] = sys.x0, u, sys.x0 @ P @ sys.x0, W_k, True
    last = N
    while k_idx < N:
        x_k = xi[:n]
        t_k = k_idx * Ts
        pred = None
        if np.any(x_k):
            ctx = PredictionContext.at_event(dyn, cert, derivs, x_k, t_k, W_k)
            tic = time.perf_counter()
            try:
                pred = next_event(ctx, params, tol2=dynamic_tol2(W_k, params))
            except PredictorError as exc:
                status, message = "predictor-failure", f"t_k={t_k:.6g}: {exc}"
                log.error("prediction failed at t_k=%.6g: %s", t_k, exc)
                last = k_idx
                break
            runtime = time.perf_counter() - tic
            j = max(int(math.floor(pred.t_next / Ts)), k_idx + 1)
        else:
            j = N + 1  # V stays 0 at the origin, nothing ever triggers
        for i in range(k_idx + 1, min(j, N) + 1):
            xi = step @ xi
            x = xi[:n]
            X[i], U[i], V[i] = x, u, x @ P @ x
            W[i] = W_k * math.exp(-cert.alpha * (t[i] - t_k))
            if check and V[i] > W[i]:
                raise CertificateViolation(f"V={V[i]:.9g} > W={W[i]:.9g} at t={t[i]:.6g}")
        if j > N:
            break
        xi = np.concatenate([xi[:n], np.zeros(n)])
        x = xi[:n]
        u = fb.control(x)
        W_k = float(x @ P @ x)
        U[j], W[j], flag[j] = u, W_k, True
        events.append(
            EventRecord(
                k=len(events) + 1,
                t_k=float(t[j]),
                t_predicted=pred.t_next,
                inter_event=float(t[j] - t_k),
                W_k=W_k,
                predictor_runtime=runtime,
                rho_k=pred.rho_k,
                branch=pred.branch,
                tol2=pred.tol2,
            )
        )
        k_idx = j

    sl = slice(0, last + 1)
    trace = Trace(t[sl], X[sl], U[sl], V[sl], W[sl], flag[sl])
    summary = summarize(
        trace, events, sim.settle_threshold, cert.lambda_max, status=status, message=message
    )
    return SimulationResult(trace, events, summary)
