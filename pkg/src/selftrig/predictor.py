"""
Self-triggered event predictor.

Given the state at an update instant ``t_k`` the next update ``t_{k+1}`` is
the first ``t > t_k`` where the gap ``Z(t) = W(t) - V(xi(t))`` reaches zero.
``Z(t_k) = 0`` by construction, so a root finder started at ``t_k`` would
just return ``t_k``. The search therefore runs in three stages:

1. :func:`minimize_plf` -- damped Newton descent on ``V(xi(t))`` from
   ``t_k``, giving the first local minimizer ``rho_k``.
2. :func:`find_bracket` -- probe forward (``Z(rho_k) > 0``) or backward
   (``Z(rho_k) < 0``) from ``rho_k`` in steps proportional to
   ``rho_k - t_k`` until ``Z`` changes sign.
3. :func:`newton_bisection` -- safeguarded Newton iteration on ``Z`` inside
   the bracket.

:func:`next_event` chains the three.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .certificate import ThresholdSegment
from .exceptions import DegenerateBracketError, NoCrossingError, PredictorError, ShapeError
from .plant import AugmentedState, reset_event_state

__all__ = [
    "SolverParams",
    "Bracket",
    "PredictionContext",
    "MinimizationResult",
    "RootResult",
    "EventPrediction",
    "gap_tolerance",
    "minimize_plf",
    "find_bracket",
    "newton_bisection",
    "dynamic_tol2",
    "next_event",
]

log = logging.getLogger(__name__)

# |d2V/dt2| below this is treated as a vanishing curvature
CURVATURE_FLOOR = 1e-30
# forward probing gives up at t_k + HORIZON_FACTOR * (rho_k - t_k)
HORIZON_FACTOR = 100.0
# relative distance to t_k treated as reaching it in backward probing
EDGE = 1e-9


@dataclass(frozen=True)
class SolverParams:
    """Tuning constants for the three predictor stages.

    Defaults are the values used for the third-order example: at most 50
    iterations per stage, backtracking factor 0.35, sufficient-decrease
    constant 0.01, minimizer tolerance 1e-5 s, bracketing scale 0.25 and
    root tolerance 1e-5 s (before dynamic tightening).
    """

    max_iter: int = 50
    beta: float = 0.35
    kappa1: float = 0.01
    tol1: float = 1e-5
    kappa2: float = 0.25
    tol2_base: float = 1e-5

    def __post_init__(self):
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta ∈ (0,1) required")
        if not 0.0 < self.kappa1 < 0.5:
            raise ValueError("kappa1 ∈ (0,0.5) required")
        if not self.tol1 > 0.0:
            raise ValueError("tol1 > 0 required")
        if not 0.0 < self.kappa2 <= 0.5:
            raise ValueError("kappa2 ∈ (0,0.5] required")
        if not self.tol2_base > 0.0:
            raise ValueError("tol2_base > 0 required")


@dataclass(frozen=True)
class Bracket:
    """Interval with ``Z(t_min) > 0 > Z(t_max)``."""

    t_min: float
    t_max: float
    branch: str = "forward"
    probes: int = 0

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise ValueError(f"bracket needs t_min < t_max, got [{self.t_min}, {self.t_max}]")

    @property
    def width(self):
        return self.t_max - self.t_min

    def __contains__(self, t):
        return self.t_min <= t <= self.t_max


class PredictionContext:
    """Everything the predictor reads for one inter-event interval.

    Parameters
    ----------
    dyn : AugmentedDynamics
    cert : PlfCertificate
    derivs : PlfDerivativeMatrices
    seg : ThresholdSegment
        Threshold on this interval; ``seg.t_k`` must equal
        ``event_state.t``.
    event_state : AugmentedState
        State at the update instant, with zero error block.
    """

    def __init__(self, dyn, cert, derivs, seg, event_state):
        if not math.isclose(seg.t_k, event_state.t, rel_tol=0.0, abs_tol=1e-12):
            raise ValueError("threshold segment and event state start at different times")
        if np.any(event_state.e != 0.0):
            raise ValueError("event state must have a zero error block")
        if event_state.n != dyn.n or cert.n != dyn.n:
            raise ShapeError("context components disagree on the state dimension")
        self.dyn = dyn
        self.cert = cert
        self.derivs = derivs
        self.seg = seg
        self.event_state = event_state
        self._P = cert.P
        self._D1 = derivs.first
        self._D2 = derivs.second

    @classmethod
    def at_event(cls, dyn, cert, derivs, x_k, t_k, W_k):
        """Context for an update at `t_k` from plant state `x_k`."""
        state = reset_event_state(x_k, t_k)
        seg = ThresholdSegment(W_k=float(W_k), t_k=float(t_k), alpha=cert.alpha)
        return cls(dyn, cert, derivs, seg, state)

    @property
    def t_k(self):
        return self.event_state.t

    def xi(self, t):
        dt = t - self.t_k
        if dt < 0.0:
            raise ValueError(f"t={t} precedes t_k={self.t_k}")
        if dt == 0.0:
            return np.array(self.event_state.xi)
        return self.dyn.transition(dt) @ self.event_state.xi

    def state(self, t):
        return AugmentedState(t=t, xi=self.xi(t))

    def V(self, t):
        x = self.xi(t)[: self.dyn.n]
        return float(x @ self._P @ x)

    def plf(self, t):
        """``(V, dV, d2V)`` at time `t`."""
        xi = self.xi(t)
        x = xi[: self.dyn.n]
        return float(x @ self._P @ x), float(xi @ self._D1 @ xi), float(xi @ self._D2 @ xi)

    def gap(self, t):
        """``(Z, dZ)`` at time `t`."""
        xi = self.xi(t)
        x = xi[: self.dyn.n]
        W = self.seg(t)
        return W - float(x @ self._P @ x), -self.seg.alpha * W - float(xi @ self._D1 @ xi)

    def Z(self, t):
        return self.gap(t)[0]


@dataclass
class MinimizationResult:
    rho: float
    iterations: int
    converged: bool
    backtracks: int = 0
    curvature_fallbacks: int = 0


@dataclass
class RootResult:
    t: float
    iterations: int
    converged: bool
    newton_steps: int = 0
    bisection_steps: int = 0
    endpoint_root: bool = False
    history: list = field(default_factory=list, repr=False)


@dataclass
class EventPrediction:
    """Outcome of one call to :func:`next_event`.

    `branch` is ``"minimum-is-event"`` when the minimizer itself sits on the
    threshold, ``"forward"`` when the crossing follows the minimum and
    ``"backward"`` when it precedes it.
    """

    t_next: float
    rho_k: float
    branch: str
    tol2: float
    minimization: MinimizationResult
    bracket: Bracket = None
    root: RootResult = None

    @property
    def converged(self):
        ok = self.minimization.converged
        if self.root is not None:
            ok = ok and self.root.converged
        return ok


def gap_tolerance(W_k):
    """Magnitude below which ``Z`` counts as an exact zero.

    Relative to ``W_k`` only: the threshold decays towards zero over a run
    and an absolute floor would eventually swallow the whole gap.
    """
    return 1e-12 * W_k


def minimize_plf(ctx, params=SolverParams()):
    """First local minimizer of ``V(xi(t))`` after ``t_k``.

    Damped Newton: the step is ``-dV / |d2V|`` scaled by backtracking until
    ``V(rho + s step) - V(rho) < kappa1 * dV * s * step``. Iteration stops
    once successive iterates differ by less than ``tol1``.

    Backtracking also stops when ``s |step|`` falls below ``tol1``: that step
    ends the iteration anyway and differences of ``V`` at that scale are
    rounding noise. Candidates before ``t_k`` are rejected. When
    ``|d2V|`` vanishes a step of ``tol1`` in the descent direction is taken.

    Returns
    -------
    MinimizationResult
        ``converged`` is False when `max_iter` iterations were used up; the
        last iterate is returned in that case.
    """
    t_k = ctx.t_k
    rho = t_k
    backtracks = fallbacks = 0
    for it in range(1, params.max_iter + 1):
        V, dV, d2V = ctx.plf(rho)
        if abs(d2V) < CURVATURE_FLOOR:
            step = -math.copysign(params.tol1, dV) if dV != 0.0 else 0.0
            fallbacks += 1
        else:
            step = -dV / abs(d2V)
        s = 1.0
        while s * abs(step) >= params.tol1:
            cand = rho + s * step
            if cand >= t_k:
                # a long trial step on an unstable plant can overflow; a
                # non-finite V simply fails the test
                with np.errstate(over="ignore", invalid="ignore"):
                    V_cand = ctx.V(cand)
                if V_cand - V < params.kappa1 * dV * s * step:
                    break
            s *= params.beta
            backtracks += 1
        prev = rho
        rho = max(rho + s * step, t_k)
        if abs(prev - rho) < params.tol1:
            return MinimizationResult(rho, it, True, backtracks, fallbacks)
    log.warning("minimize_plf: max_iter=%d reached at rho=%.9g", params.max_iter, rho)
    return MinimizationResult(rho, params.max_iter, False, backtracks, fallbacks)


def find_bracket(rho_k, ctx, params=SolverParams(), horizon=None):
    """Bracket the first sign change of ``Z`` next to `rho_k`.

    With ``theta = kappa2 (rho_k - t_k)``: if ``Z(rho_k) > 0`` probe
    ``rho_k + theta, rho_k + 2 theta, ...`` until ``Z <= 0``; otherwise
    probe backwards, halving the step whenever it would reach ``t_k``,
    until ``Z >= 0``. The last two probes form the bracket.

    Parameters
    ----------
    horizon : float, optional
        Forward probing stops with :class:`NoCrossingError` past this time.
        Defaults to ``t_k + 100 (rho_k - t_k)``.
    """
    t_k = ctx.t_k
    span = rho_k - t_k
    if not span > 0.0:
        raise DegenerateBracketError(f"rho_k={rho_k} does not exceed t_k={t_k}")
    if horizon is None:
        horizon = t_k + HORIZON_FACTOR * span
    z1 = ctx.Z(rho_k)
    if z1 == 0.0:
        raise ValueError("Z(rho_k) = 0; rho_k is itself the event")
    probes = 0
    if z1 > 0.0:
        theta = params.kappa2 * span
        t_lo = rho_k
        while True:
            t2 = t_lo + theta
            if t2 > horizon:
                raise NoCrossingError(f"no crossing between {rho_k:.9g} and horizon {horizon:.9g}")
            probes += 1
            if ctx.Z(t2) <= 0.0:
                return Bracket(t_lo, t2, "forward", probes)
            t_lo = t2
    # probes are measured from the last negative one; a probe within
    # EDGE * span of t_k counts as reaching it (Z(t_k) = 0 when W_k = V_k)
    theta = params.kappa2 * span
    t_hi = rho_k
    while True:
        t2 = t_hi - theta
        if t2 - t_k <= EDGE * span:
            theta /= 2.0
            if theta <= EDGE * span:
                raise NoCrossingError(f"Z stays negative on ({t_k:.9g}, {rho_k:.9g}]")
            continue
        probes += 1
        if ctx.Z(t2) >= 0.0:
            return Bracket(t2, t_hi, "backward", probes)
        t_hi = t2


def newton_bisection(bracket, ctx, params=SolverParams(), tol2=None):
    """Root of ``Z`` inside `bracket` by safeguarded Newton iteration.

    Starts from the midpoint. A Newton step is replaced by bisection when it
    would leave the open bracket or when it is larger than half the step
    before last. The bracket shrinks by the sign of ``Z`` at each new
    iterate. Stops when the last step is shorter than `tol2`, floored at a
    few ulps of ``t`` since no step can resolve finer than that.
    """
    if tol2 is None:
        tol2 = dynamic_tol2(ctx.seg.W_k, params)
    if not tol2 > 0.0:
        raise ValueError("tol2 must be positive")
    tol_z = gap_tolerance(ctx.seg.W_k)
    lo, hi = bracket.t_min, bracket.t_max
    tol2 = max(tol2, 8.0 * np.spacing(max(abs(lo), abs(hi))))
    z_lo, z_hi = ctx.Z(lo), ctx.Z(hi)
    if abs(z_lo) <= tol_z:
        return RootResult(lo, 0, True, endpoint_root=True)
    if abs(z_hi) <= tol_z:
        return RootResult(hi, 0, True, endpoint_root=True)
    if not (z_lo > 0.0 > z_hi):
        raise ValueError(f"invalid bracket: Z(t_min)={z_lo:.6g}, Z(t_max)={z_hi:.6g}")

    t = 0.5 * (lo + hi)
    dt = hi - lo
    dt_old = dt
    Z, dZ = ctx.gap(t)
    newton = bisect = 0
    history = [(lo, hi)]
    for it in range(1, params.max_iter + 1):
        step = Z / dZ if dZ != 0.0 else math.inf
        if lo >= t - step or hi <= t - step or abs(dt_old) / 2.0 < abs(step):
            dt_old = dt
            dt = (hi - lo) / 2.0
            t = lo + dt
            bisect += 1
        else:
            dt_old = dt
            dt = step
            t = t - dt
            newton += 1
        if abs(dt) < tol2:
            return RootResult(t, it, True, newton, bisect, history=history)
        Z, dZ = ctx.gap(t)
        if Z > 0.0:
            lo = t
        else:
            hi = t
        history.append((lo, hi))
    log.warning("newton_bisection: max_iter=%d reached at t=%.9g", params.max_iter, t)
    return RootResult(t, params.max_iter, False, newton, bisect, history=history)


def dynamic_tol2(W_k, params=SolverParams()):
    """Root tolerance tightened as the threshold shrinks.

    ``tol2_base`` while ``W_k >= 1``; below that it is divided by
    ``10 ** ceil(|log10 W_k|)``, so ``W_k = 0.0948`` gives ``1e-7`` with the
    default base.
    """
    if not W_k > 0.0:
        raise ValueError(f"W_k must be positive, got {W_k}")
    if W_k >= 1.0:
        return params.tol2_base
    phi = math.ceil(abs(math.log10(W_k)))
    return params.tol2_base * 10.0 ** (-phi)


def next_event(ctx, params=SolverParams(), tol2=None, horizon=None):
    """Predict the next update instant from `ctx`.

    Returns
    -------
    EventPrediction

    Raises
    ------
    PredictorError
        When no bracket can be formed (degenerate minimizer or no crossing
        before `horizon`).
    """
    if tol2 is None:
        tol2 = dynamic_tol2(ctx.seg.W_k, params)
    mini = minimize_plf(ctx, params)
    rho = mini.rho
    z_rho = ctx.Z(rho)
    if abs(z_rho) <= gap_tolerance(ctx.seg.W_k) and rho > ctx.t_k:
        return EventPrediction(rho, rho, "minimum-is-event", tol2, mini)
    bracket = find_bracket(rho, ctx, params, horizon)
    root = newton_bisection(bracket, ctx, params, tol2)
    if not root.t > ctx.t_k:
        raise PredictorError(f"predicted event {root.t!r} does not follow t_k={ctx.t_k!r}")
    return EventPrediction(root.t, rho, bracket.branch, tol2, mini, bracket, root)
