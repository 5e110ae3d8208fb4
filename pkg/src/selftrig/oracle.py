"""
Brute-force references for the predictor.

Both scans walk a uniform grid ``t_k + i * grid_step`` and look for the
first sign change, so they share the dynamics with the predictor but none of
its search logic. The grid is evaluated in vectorized chunks: the state at
each chunk start comes straight from ``exp(Psi (t - t_k))`` and the points
inside a chunk from precomputed powers of the one-step transition.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import NoCrossingError

__all__ = ["ScanResult", "dense_event_scan", "dense_min_scan"]

CHUNK = 2048


@dataclass(frozen=True)
class ScanResult:
    t_found: float
    grid_step: float
    samples_evaluated: int


def _chunks(ctx, grid_step, horizon):
    """Yield ``(i, V_i)`` arrays for grid indices ``i = 0 .. horizon/grid_step``."""
    if not grid_step > 0.0:
        raise ValueError("grid_step must be positive")
    n = ctx.dyn.n
    last = int(np.floor(horizon / grid_step + 1e-9))
    E = ctx.dyn.transition(grid_step)
    powers = np.empty((CHUNK, n, 2 * n))
    acc = np.eye(2 * n)
    for j in range(CHUNK):
        powers[j] = acc[:n]
        acc = acc @ E
    P = ctx.cert.P
    xi_k = ctx.event_state.xi
    start = 0
    while start <= last:
        stop = min(start + CHUNK, last + 1)
        xi0 = ctx.dyn.transition(start * grid_step) @ xi_k if start else xi_k
        x = powers[: stop - start] @ xi0
        V = np.einsum("ji,ik,jk->j", x, P, x)
        yield np.arange(start, stop), V
        start = stop


def dense_event_scan(ctx, grid_step=1e-6, horizon=10.0):
    """First grid point after ``t_k + grid_step`` where ``Z`` turns negative.

    The true crossing lies within one `grid_step` before ``t_found``.

    Parameters
    ----------
    ctx : PredictionContext
    grid_step : float
    horizon : float
        Length of the scanned window after ``t_k``.

    Raises
    ------
    NoCrossingError
        If ``Z`` never goes from positive to negative inside the window.
    """
    seg = ctx.seg
    prev_positive = False
    count = 0
    for idx, V in _chunks(ctx, grid_step, horizon):
        count += idx.size
        Z = seg.W_k * np.exp(-seg.alpha * idx * grid_step) - V
        pos = Z > 0.0
        neg = Z < 0.0
        # neg[j] with pos[j-1], carrying the last flag across chunks
        before = np.concatenate([[prev_positive], pos[:-1]])
        hit = np.nonzero(neg & before & (idx >= 2))[0]
        if hit.size:
            i = int(idx[hit[0]])
            return ScanResult(ctx.t_k + i * grid_step, grid_step, count - idx.size + hit[0] + 1)
        prev_positive = bool(pos[-1])
    raise NoCrossingError(f"no crossing within {horizon} s of t_k={ctx.t_k}")


def dense_min_scan(ctx, grid_step=1e-6, horizon=10.0):
    """First grid point where the forward difference of ``V`` turns from
    negative to non-negative, i.e. the first local minimum on the grid."""
    prev_V = None
    prev_diff_neg = False
    count = 0
    for idx, V in _chunks(ctx, grid_step, horizon):
        count += idx.size
        full = V if prev_V is None else np.concatenate([[prev_V], V])
        base = idx[0] if prev_V is None else idx[0] - 1
        diff = np.diff(full)
        neg = diff < 0.0
        before = np.concatenate([[prev_diff_neg], neg[:-1]])
        hit = np.nonzero(~neg & before)[0]
        if hit.size:
            i = int(base + hit[0])
            return ScanResult(ctx.t_k + i * grid_step, grid_step, count)
        prev_V = V[-1]
        prev_diff_neg = bool(neg[-1]) if neg.size else prev_diff_neg
    raise NoCrossingError(f"V has no interior minimum within {horizon} s of t_k={ctx.t_k}")


@dataclass(frozen=True)
class OracleComparison:
    """Predictor versus dense scan for one event."""

    k: int
    t_k: float
    t_predicted: float
    t_scan: float
    delta: float
    branch: str
    runtime: float
    tol2: float

    @property
    def inter_event(self):
        return self.t_predicted - self.t_k

    def agrees(self, grid_step):
        """Within ``max(tol2, 2 grid_step)`` of the scan."""
        return abs(self.delta) <= max(self.tol2, 2.0 * grid_step)


def compare_with_oracle(sys, fb, cert, params=None, events=5, grid_step=1e-6):
    """Chain `events` predictions from ``t = 0`` and scan each interval.

    Each interval starts at the previous predicted (continuous) instant with
    the threshold restarted at ``V``; both methods see the same context. The
    scan window is twice the predicted inter-event time, so an earlier
    crossing missed by the predictor is always caught.
    """
    import time

    from .certificate import build_derivative_matrices
    from .plant import build_closed_loop
    from .predictor import PredictionContext, SolverParams, next_event

    params = SolverParams() if params is None else params
    dyn = build_closed_loop(sys, fb)
    derivs = build_derivative_matrices(sys, fb, cert.P)
    x_k, t_k, W_k = sys.x0, 0.0, cert.W0
    out = []
    for k in range(1, events + 1):
        ctx = PredictionContext.at_event(dyn, cert, derivs, x_k, t_k, W_k)
        tic = time.perf_counter()
        pred = next_event(ctx, params)
        runtime = time.perf_counter() - tic
        window = 2.0 * (pred.t_next - t_k) + 10.0 * grid_step
        scan = dense_event_scan(ctx, grid_step, window)
        out.append(
            OracleComparison(
                k, t_k, pred.t_next, scan.t_found, pred.t_next - scan.t_found, pred.branch, runtime, pred.tol2
            )
        )
        x_k = ctx.xi(pred.t_next)[: sys.n]
        t_k = pred.t_next
        W_k = float(x_k @ cert.P @ x_k)
    return out


def random_system(rng, n, alpha_range=(0.5, 0.9)):
    """Random stabilizable plant with an LQR gain and synthesized certificate.

    Entries of ``A``, ``B`` and ``x0`` are uniform on [-2, 2]; ``alpha`` is a
    uniform fraction of ``lambda_max`` drawn from `alpha_range`.
    """
    from scipy import linalg

    from .certificate import lambda_max, make_certificate
    from .plant import Feedback, LtiSystem

    while True:
        A = rng.uniform(-2.0, 2.0, (n, n))
        B = rng.uniform(-2.0, 2.0, (n, 1))
        x0 = rng.uniform(-2.0, 2.0, n)
        ctrb = np.hstack([np.linalg.matrix_power(A, i) @ B for i in range(n)])
        if np.linalg.cond(ctrb) > 1e6 or np.linalg.norm(x0) < 0.1:
            continue
        X = linalg.solve_continuous_are(A, B, np.eye(n), np.eye(1))
        sys = LtiSystem(A=A, B=B, x0=x0)
        fb = Feedback(K=B.T @ X)
        alpha = rng.uniform(*alpha_range) * lambda_max(sys, fb)
        return sys, fb, make_certificate(sys, fb, alpha)
