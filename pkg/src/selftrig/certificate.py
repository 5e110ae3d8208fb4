"""
Quadratic pseudo-Lyapunov certificate and its time derivatives.

The function watched by the trigger is ``V(xi) = xi^T calP xi`` with
``calP = blkdiag(P, 0)``, so only the plant-state block of ``xi`` matters.
Along the augmented flow its first two time derivatives are again quadratic
forms in ``xi``:

    dV  = xi^T [[M, L], [L^T, 0]] xi
    d2V = xi^T [[Lambda, Gamma], [Gamma^T, gamma]] xi

with ``F = A - BK`` and

    M      = F^T P + P F
    L      = P BK
    Lambda = F^T M + M F + F^T L^T + L F
    Gamma  = F^T L + M BK + L BK
    gamma  = L^T BK + (BK)^T L

These five matrices depend only on the plant, the gain and ``P``; they are
built once per certificate.
"""

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import ShapeError, SynthesisError
from .kernels import as_matrix, eigenvalues, is_positive_definite, solve_lyapunov
from .plant import AugmentedState, build_closed_loop, propagate

__all__ = [
    "PlfCertificate",
    "PlfDerivativeMatrices",
    "ThresholdSegment",
    "lambda_max",
    "synthesize_P",
    "build_derivative_matrices",
    "make_certificate",
    "certificate_slack",
    "evaluate_plf",
    "evaluate_gap",
]

# certificate slack relative to ||P||_2
SYNTHESIZED_SLACK = 1e-8
SUPPLIED_SLACK = 1e-1


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PlfCertificate:
    """Validated certificate data.

    Attributes
    ----------
    P : (n, n) ndarray
        Symmetric positive definite weight.
    lambda_max : float
        Supremal decay rate admitted by the closed loop.
    alpha : float
        Decay rate of the threshold, ``0 < alpha < lambda_max``.
    W0 : float
        Initial threshold value, at least ``x0^T P x0``.
    """

    P: np.ndarray
    lambda_max: float
    alpha: float
    W0: float

    @property
    def n(self):
        return self.P.shape[0]

    @property
    def calP(self):
        n = self.n
        out = np.zeros((2 * n, 2 * n))
        out[:n, :n] = self.P
        return out


@dataclass(frozen=True, eq=False)
class PlfDerivativeMatrices:
    M: np.ndarray
    L: np.ndarray
    Lambda: np.ndarray
    Gamma: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        n = self.M.shape[0]
        z = np.zeros((n, n))
        object.__setattr__(self, "_D1", _frozen(np.block([[self.M, self.L], [self.L.T, z]])))
        object.__setattr__(
            self, "_D2", _frozen(np.block([[self.Lambda, self.Gamma], [self.Gamma.T, self.gamma]]))
        )

    @property
    def first(self):
        """2n x 2n matrix of the quadratic form giving ``dV/dt``."""
        return self._D1

    @property
    def second(self):
        """2n x 2n matrix of the quadratic form giving ``d2V/dt2``."""
        return self._D2


@dataclass(frozen=True)
class ThresholdSegment:
    """Threshold ``W(t) = W_k exp(-alpha (t - t_k))`` on one inter-event interval."""

    W_k: float
    t_k: float
    alpha: float

    def __post_init__(self):
        if not self.W_k > 0.0:
            raise ValueError(f"W_k must be positive, got {self.W_k}")

    def __call__(self, t):
        return self.W_k * math.exp(-self.alpha * (t - self.t_k))


def lambda_max(sys, fb):
    """Largest decay rate ``lambda`` for which some ``P > 0`` satisfies

        (A - BK)^T P + P (A - BK) <= -lambda P.

    The inequality is feasible exactly when ``A - BK + lambda/2 I`` is
    Hurwitz, so the supremum is ``-2 max Re eig(A - BK)``. No ``P`` is
    involved.
    """
    dyn = build_closed_loop(sys, fb)
    return float(-2.0 * np.max(eigenvalues(dyn.A_cl).real))


def synthesize_P(sys, fb, lam):
    """``P > 0`` with ``F^T P + P F <= -lam P`` for ``F = A - BK``.

    Solves the shifted Lyapunov equation
    ``(F + lam/2 I)^T P + P (F + lam/2 I) = -I``, which gives
    ``F^T P + P F + lam P = -I``.
    """
    dyn = build_closed_loop(sys, fb)
    lam_sup = float(-2.0 * np.max(eigenvalues(dyn.A_cl).real))
    if not 0.0 < lam < lam_sup:
        raise SynthesisError(f"decay rate {lam} outside (0, lambda_max={lam_sup:.6g})")
    n = sys.n
    return solve_lyapunov(dyn.A_cl + 0.5 * lam * np.eye(n), np.eye(n))


def build_derivative_matrices(sys, fb, P):
    P = as_matrix(P, "P", square=True)
    if P.shape != (sys.n, sys.n):
        raise ShapeError(f"P has shape {P.shape}, expected {(sys.n, sys.n)}")
    if fb.K.shape != (sys.m, sys.n):
        raise ShapeError(f"K has shape {fb.K.shape}, expected {(sys.m, sys.n)}")
    BK = sys.B @ fb.K
    F = sys.A - BK
    M = F.T @ P + P @ F
    L = P @ BK
    Lam = F.T @ M + M @ F + F.T @ L.T + L @ F
    Gam = F.T @ L + M @ BK + L @ BK
    gam = L.T @ BK + BK.T @ L
    return PlfDerivativeMatrices(
        M=_frozen(M), L=_frozen(L), Lambda=_frozen(Lam), Gamma=_frozen(Gam), gamma=_frozen(gam)
    )


def certificate_slack(sys, fb, P, alpha):
    """Largest eigenvalue of ``F^T P + P F + alpha P``; <= 0 for a valid pair."""
    F = sys.A - sys.B @ fb.K
    R = F.T @ P + P @ F + alpha * P
    return float(np.linalg.eigvalsh(0.5 * (R + R.T))[-1])


def make_certificate(sys, fb, alpha, P=None, w0_multiplier=None, w0_absolute=None, slack=None):
    """Build and validate a :class:`PlfCertificate`.

    Parameters
    ----------
    sys : LtiSystem
    fb : Feedback
    alpha : float
        Threshold decay rate, strictly between 0 and ``lambda_max``.
    P : array_like, optional
        Explicit weight. If omitted, ``P`` is synthesized with decay rate
        `alpha`.
    w0_multiplier, w0_absolute : float, optional
        At most one may be given. ``W0 = w0_multiplier * V(x0)`` or
        ``W0 = w0_absolute``. Defaults to a multiplier of 1.
    slack : float, optional
        Tolerance on the largest eigenvalue of ``F^T P + P F + alpha P``.
        Defaults to ``1e-8 ||P||`` for a synthesized ``P`` and ``1e-1 ||P||``
        for a supplied one (hand-entered matrices are usually rounded).
    """
    lam = lambda_max(sys, fb)
    if not 0.0 < alpha < lam:
        raise SynthesisError(f"alpha={alpha} must lie in (0, lambda_max={lam:.6g})")
    if P is None:
        P = synthesize_P(sys, fb, alpha)
        rel = SYNTHESIZED_SLACK
    else:
        P = as_matrix(P, "P", square=True)
        if P.shape != (sys.n, sys.n):
            raise ShapeError(f"P has shape {P.shape}, expected {(sys.n, sys.n)}")
        P = 0.5 * (P + P.T)
        rel = SUPPLIED_SLACK
    if not is_positive_definite(P):
        raise SynthesisError("P is not positive definite")
    if slack is None:
        slack = rel * np.linalg.norm(P, 2)
    worst = certificate_slack(sys, fb, P, alpha)
    if worst > slack:
        raise SynthesisError(
            f"P does not certify decay rate {alpha}: max eigenvalue {worst:.6g} > slack {slack:.6g}"
        )
    if w0_multiplier is not None and w0_absolute is not None:
        raise ValueError("give at most one of w0_multiplier and w0_absolute")
    V0 = float(sys.x0 @ P @ sys.x0)
    if w0_absolute is not None:
        W0 = float(w0_absolute)
    else:
        W0 = (1.0 if w0_multiplier is None else float(w0_multiplier)) * V0
    if W0 < V0:
        raise SynthesisError(f"W0={W0:.6g} is below V(x0)={V0:.6g}")
    return PlfCertificate(P=_frozen(P), lambda_max=lam, alpha=float(alpha), W0=W0)


def _xi(state):
    return state.xi if isinstance(state, AugmentedState) else np.asarray(state, dtype=float)


def evaluate_plf(cert, derivs, xi):
    """Return ``(V, dV/dt, d2V/dt2)`` at augmented state `xi`."""
    xi = _xi(xi)
    n = cert.n
    if xi.shape != (2 * n,):
        raise ShapeError(f"xi must have length {2 * n}")
    x = xi[:n]
    V = float(x @ cert.P @ x)
    dV = float(xi @ derivs.first @ xi)
    d2V = float(xi @ derivs.second @ xi)
    return V, dV, d2V


def evaluate_gap(seg, cert, derivs, dyn, event_state, t):
    """Gap ``Z = W(t) - V(xi(t))`` and its time derivative at time `t`."""
    if t < seg.t_k:
        raise ValueError(f"t={t} precedes the segment start t_k={seg.t_k}")
    xi = propagate(dyn, event_state, t - event_state.t).xi
    x = xi[: cert.n]
    W = seg(t)
    Z = W - float(x @ cert.P @ x)
    dZ = -seg.alpha * W - float(xi @ derivs.first @ xi)
    return Z, dZ
