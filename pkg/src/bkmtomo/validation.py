"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

# Geometry operations need a strictly positive density matrix.  States whose
# Bloch norm reaches this bound are rejected rather than clamped: the inverse
# metric diverges there and clamping would silently corrupt weights.
MIXED_STATE_BOUND = 1.0 - 1e-12


class BoundaryError(ValueError):
    """State is on or outside the admissible region of the Bloch ball."""


def as_vector3(x, name: str = "vector") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have shape (3,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def as_bloch(a, *, bound: float = 1.0, name: str = "bloch vector") -> np.ndarray:
    """Validate a Bloch vector, requiring ``|a| < bound``."""
    arr = as_vector3(a, name)
    r = float(np.linalg.norm(arr))
    if r >= bound:
        raise BoundaryError(f"{name} has norm {r:.17g}, requires < {bound:.17g}")
    return arr


def as_mixed_bloch(a, name: str = "bloch vector") -> np.ndarray:
    """Validate a Bloch vector strictly inside the unit ball (mixed state)."""
    return as_bloch(a, bound=MIXED_STATE_BOUND, name=name)


def as_bloch_batch(a, name: str = "bloch samples") -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def as_hermitian(m, *, atol: float = 1e-12, name: str = "operator") -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.shape != (2, 2):
        raise ValueError(f"{name} must be a 2x2 matrix, got shape {arr.shape}")
    if not np.allclose(arr, arr.conj().T, atol=atol, rtol=0.0):
        raise ValueError(f"{name} is not Hermitian within {atol:g}")
    return arr


def require_uniform_grid(t: np.ndarray, *, rtol: float = 1e-9) -> float:
    """Check that ``t`` is an increasing uniform grid and return its spacing."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("time grid needs at least two samples")
    steps = np.diff(t)
    dt = float(steps[0])
    if dt <= 0.0:
        raise ValueError("time grid must be increasing")
    if not np.allclose(steps, dt, rtol=rtol, atol=0.0):
        raise ValueError("time grid is not uniform")
    return dt
