"""
Dense real-matrix primitives.

Everything downstream works with small (n <= ~20) dense ``float64`` arrays.
These helpers validate shapes and finiteness once, then defer to LAPACK via
scipy for the heavy lifting:

* :func:`mat_exp` -- ``expm(F * dt)`` by scaling and squaring with a Pade
  approximant (safe for defective matrices such as the augmented
  closed-loop matrix, whose two block rows are identical).
* :func:`eigenvalues` -- the eigenvalue multiset of a square matrix.
* :func:`solve_lyapunov` -- ``F^T P + P F = -Q`` for Hurwitz ``F``.
* :func:`is_positive_definite` -- definiteness test on the symmetric part.
"""

import numpy as np
from scipy import linalg

from .exceptions import ShapeError, SynthesisError

__all__ = [
    "as_matrix",
    "as_vector",
    "mat_exp",
    "eigenvalues",
    "is_hurwitz",
    "solve_lyapunov",
    "is_positive_definite",
]

# relative asymmetry allowed before a "symmetric" input is rejected
SYMMETRY_RTOL = 1e-9


def as_matrix(value, name="matrix", square=False):
    """Return `value` as a finite 2-D float array.

    Scalars become 1x1 and flat sequences become a single row.
    """
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} has non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {arr.shape}")
    return arr


def as_vector(value, name="vector", size=None):
    arr = np.array(value, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} has non-finite entries")
    if size is not None and arr.size != size:
        raise ShapeError(f"{name} must have {size} entries, got {arr.size}")
    return arr


def mat_exp(F, dt=1.0):
    """Matrix exponential ``exp(F * dt)``.

    Parameters
    ----------
    F : (n, n) array_like
        Square real matrix.
    dt : float
        Time step. Must be finite; ``dt = 0`` returns the identity exactly.

    Returns
    -------
    (n, n) ndarray
    """
    F = as_matrix(F, "F", square=True)
    if not np.isfinite(dt):
        raise ShapeError("dt must be finite")
    if dt == 0.0:
        return np.eye(F.shape[0])
    return linalg.expm(F * dt)


def eigenvalues(F):
    """Eigenvalues of a square matrix as a complex array of length n."""
    F = as_matrix(F, "F", square=True)
    return linalg.eigvals(F).astype(complex)


def is_hurwitz(F):
    return bool(np.max(eigenvalues(F).real) < 0.0)


def _check_symmetric(P, name):
    scale = max(np.max(np.abs(P)), np.finfo(float).tiny)
    if np.max(np.abs(P - P.T)) > SYMMETRY_RTOL * scale:
        raise ShapeError(f"{name} is not symmetric")


def solve_lyapunov(F, Q):
    """Solve ``F^T P + P F = -Q`` for symmetric ``P``.

    Parameters
    ----------
    F : (n, n) array_like
        Hurwitz matrix.
    Q : (n, n) array_like
        Symmetric right-hand side, normally positive definite.

    Returns
    -------
    P : (n, n) ndarray
        Symmetric solution. Positive definite when `Q` is.

    Raises
    ------
    SynthesisError
        If `F` is not Hurwitz, in which case no positive definite solution
        exists.
    """
    F = as_matrix(F, "F", square=True)
    Q = as_matrix(Q, "Q", square=True)
    if Q.shape != F.shape:
        raise ShapeError(f"Q has shape {Q.shape}, expected {F.shape}")
    _check_symmetric(Q, "Q")
    if not is_hurwitz(F):
        raise SynthesisError("Lyapunov synthesis failed: matrix is not Hurwitz")
    # scipy solves A X + X A^H = Q, so pass F^T and -Q
    P = linalg.solve_continuous_lyapunov(F.T, -Q)
    return 0.5 * (P + P.T)


def is_positive_definite(P, margin=0.0):
    """True iff the smallest eigenvalue of sym(P) exceeds `margin`."""
    P = as_matrix(P, "P", square=True)
    _check_symmetric(P, "P")
    sym = 0.5 * (P + P.T)
    return bool(np.linalg.eigvalsh(sym)[0] > margin)
