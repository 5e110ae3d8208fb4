"""
Plant, feedback gain and the augmented closed loop.

Between two updates the control is held at ``u = -K x(t_k)``. Stacking the
state with the hold error ``e = x - x(t_k)`` gives the autonomous system

    d/dt [x; e] = Psi [x; e],    Psi = [[A - BK, BK],
                                        [A - BK, BK]]

whose solution ``exp(Psi (t - t_k)) [x(t_k); 0]`` exists for any ``A``,
singular or not.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeError, SynthesisError
from .kernels import as_matrix, as_vector, eigenvalues, mat_exp

__all__ = [
    "LtiSystem",
    "Feedback",
    "AugmentedDynamics",
    "AugmentedState",
    "build_closed_loop",
    "propagate",
    "reset_event_state",
]


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """``dx/dt = A x + B u`` with initial state ``x0``."""

    A: np.ndarray
    B: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A", square=True)
        B = as_matrix(self.B, "B")
        if B.shape[0] != A.shape[0]:
            raise ShapeError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
        x0 = as_vector(self.x0, "x0", size=A.shape[0])
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "x0", _frozen(x0))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


@dataclass(frozen=True, eq=False)
class Feedback:
    """State feedback gain ``K`` (m x n); the control law is ``u = -K x``."""

    K: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "K", _frozen(as_matrix(self.K, "K")))

    def control(self, x):
        return -self.K @ x


@dataclass(frozen=True, eq=False)
class AugmentedDynamics:
    """The 2n x 2n matrix ``Psi`` together with its building blocks."""

    Psi: np.ndarray
    A_cl: np.ndarray
    BK: np.ndarray

    @property
    def n(self):
        return self.A_cl.shape[0]

    def transition(self, dt):
        """``exp(Psi * dt)``."""
        return mat_exp(self.Psi, dt)


@dataclass(frozen=True, eq=False)
class AugmentedState:
    """Augmented state ``xi = [x; e]`` at time `t`."""

    t: float
    xi: np.ndarray

    def __post_init__(self):
        xi = as_vector(self.xi, "xi")
        if xi.size % 2:
            raise ShapeError("xi must have even length 2n")
        if not np.isfinite(self.t):
            raise ShapeError("t must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "xi", _frozen(xi))

    @property
    def n(self):
        return self.xi.size // 2

    @property
    def x(self):
        return self.xi[: self.n]

    @property
    def e(self):
        return self.xi[self.n :]


def build_closed_loop(sys, fb):
    """Assemble ``Psi`` for plant `sys` under gain `fb`.

    Raises
    ------
    ShapeError
        If ``K`` is not m x n.
    SynthesisError
        If ``A - BK`` is not Hurwitz.
    """
    if fb.K.shape != (sys.m, sys.n):
        raise ShapeError(f"K has shape {fb.K.shape}, expected {(sys.m, sys.n)}")
    BK = sys.B @ fb.K
    A_cl = sys.A - BK
    poles = eigenvalues(A_cl)
    if np.max(poles.real) >= 0.0:
        raise SynthesisError(
            f"A - BK is not Hurwitz (max real part {np.max(poles.real):.6g})"
        )
    top = np.hstack([A_cl, BK])
    return AugmentedDynamics(Psi=_frozen(np.vstack([top, top])), A_cl=_frozen(A_cl), BK=_frozen(BK))


def reset_event_state(x, t):
    """Event-instant state ``[x; 0]`` at time `t`."""
    x = as_vector(x, "x")
    return AugmentedState(t=t, xi=np.concatenate([x, np.zeros_like(x)]))


def propagate(dyn, at_event, dt):
    """Advance an event-instant state by `dt` under the held control.

    Parameters
    ----------
    dyn : AugmentedDynamics
    at_event : AugmentedState
        State at the last update instant; its error block must be zero.
    dt : float
        Non-negative elapsed time since the update.

    Returns
    -------
    AugmentedState
        State at ``at_event.t + dt``.
    """
    if dt < 0.0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    if at_event.n != dyn.n:
        raise ShapeError(f"state has n={at_event.n}, dynamics have n={dyn.n}")
    if np.any(at_event.e != 0.0):
        raise ValueError("propagate expects an event-instant state with e = 0")
    if dt == 0.0:
        return at_event
    return AugmentedState(t=at_event.t + dt, xi=dyn.transition(dt) @ at_event.xi)
