"""
Closed forms for first-order plants ``dx/dt = a x + b u``.

With ``u = -K x_k`` held from ``t_k``,

    x(t) = (bK/a + (1 - bK/a) exp(a (t - t_k))) x_k

and ``V = p x^2`` is stationary only where ``x(t) = 0``, which happens at

    rho_k = t_k + log(bK / (bK - a)) / a

independently of ``x_k``. Used as an analytic reference for the numerical
predictor.
"""

from dataclasses import dataclass
import math

import numpy as np

from .plant import Feedback, LtiSystem

__all__ = ["ScalarSystem", "GainCheck", "scalar_state", "rho_k_analytic", "validate_gain"]


@dataclass(frozen=True)
class ScalarSystem:
    """First-order plant, gain and quadratic weight.

    `c` is the output coefficient of ``y = c x``; nothing here reads it.
    `q` is the design margin in ``2 p (a - bK) <= -q``.
    """

    a: float
    b: float
    K: float
    p: float = 1.0
    q: float = None
    c: float = 1.0

    def __post_init__(self):
        if self.a == 0.0 or self.b == 0.0 or self.c == 0.0:
            raise ValueError("a, b and c must be nonzero")
        if not self.a - self.b * self.K < 0.0:
            raise ValueError(f"a - bK = {self.a - self.b * self.K:.6g} must be negative")
        if not self.p > 0.0:
            raise ValueError("p must be positive")
        q = -2.0 * self.p * (self.a - self.b * self.K) if self.q is None else self.q
        if not q > 0.0:
            raise ValueError("q must be positive")
        if 2.0 * self.p * (self.a - self.b * self.K) > -q * (1.0 - 1e-12):
            raise ValueError("p does not satisfy 2 p (a - bK) <= -q")
        object.__setattr__(self, "q", float(q))

    def to_lti(self, x0=1.0):
        """Equivalent :class:`LtiSystem`, :class:`Feedback` and ``P``."""
        sys = LtiSystem(A=[[self.a]], B=[[self.b]], x0=[x0])
        return sys, Feedback(K=[[self.K]]), np.array([[self.p]])


@dataclass(frozen=True)
class GainCheck:
    valid: bool
    case: str
    ratio: float
    after_t_k: bool


def scalar_state(sys, x_k, t_k, t):
    """Plant state at `t` under the control held since `t_k`."""
    if t < t_k:
        raise ValueError("t must not precede t_k")
    r = sys.b * sys.K / sys.a
    return (r + (1.0 - r) * math.exp(sys.a * (t - t_k))) * x_k


def validate_gain(sys):
    """Check that ``bK / (bK - a)`` is positive so the log is defined.

    For ``a > 0`` the ratio also exceeds 1; for ``a < 0`` it lies in (0, 1).
    Either way ``rho_k > t_k`` when the ratio is positive.
    """
    bk = sys.b * sys.K
    ratio = bk / (bk - sys.a)
    case = "a>0" if sys.a > 0.0 else "a<0"
    valid = ratio > 0.0
    after = valid and math.log(ratio) / sys.a > 0.0
    return GainCheck(valid=valid, case=case, ratio=ratio, after_t_k=after)


def rho_k_analytic(sys, t_k=0.0):
    """Minimizer of ``V = p x^2`` after `t_k`."""
    check = validate_gain(sys)
    if not check.valid:
        raise ValueError(f"bK/(bK-a) = {check.ratio:.6g} is not positive; V has no minimum")
    return t_k + math.log(check.ratio) / sys.a
