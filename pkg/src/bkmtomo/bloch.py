"""Qubit states in Bloch and natural (exponential-family) coordinates.

A mixed single-qubit state is parameterized by its Bloch vector ``a`` with
``|a| < 1``, via ``rho = (I + a . sigma) / 2``.  The same state admits the
exponential form ``rho = exp(theta . sigma - psi(theta))`` with natural
parameters ``theta = (arctanh|a| / |a|) a`` and log-partition potential
``psi(theta) = ln Tr exp(theta . sigma) = ln(2 cosh|theta|)``.

Everything downstream (metric, speeds, regression weights) closes over the
Bloch coordinates; density matrices are provided for oracle-style checks.
"""

from __future__ import annotations

import numpy as np

from .validation import BoundaryError, as_bloch, as_vector3

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
IDENTITY_2 = np.eye(2, dtype=complex)

# Below this radius both radial profiles are evaluated by their Taylor series;
# the direct quotients lose no accuracy above it and the series is exact to
# double precision below it.
SERIES_RADIUS = 1e-4


def arctanh_over_r(r: float) -> float:
    """``arctanh(r) / r`` with the removable singularity at r = 0 filled in."""
    if r < SERIES_RADIUS:
        r2 = r * r
        return 1.0 + r2 / 3.0 + r2 * r2 / 5.0
    return float(np.arctanh(r)) / r


def tanh_over_s(s: float) -> float:
    """``tanh(s) / s`` with the removable singularity at s = 0 filled in."""
    if s < SERIES_RADIUS:
        s2 = s * s
        return 1.0 - s2 / 3.0 + 2.0 * s2 * s2 / 15.0
    return float(np.tanh(s)) / s


def to_natural(a) -> np.ndarray:
    """Map a Bloch vector to the natural parameters of the exponential family.

    ``theta = (arctanh|a| / |a|) a``.  Rejects ``|a| >= 1``: pure states sit at
    infinity in natural coordinates.
    """
    a = as_bloch(a, bound=1.0)
    r = float(np.linalg.norm(a))
    return arctanh_over_r(r) * a


def from_natural(theta) -> np.ndarray:
    """Inverse of :func:`to_natural`: ``a = (tanh|theta| / |theta|) theta``.

    Defined for every finite ``theta``; the image is the open unit ball.
    """
    theta = as_vector3(theta, "theta")
    s = float(np.linalg.norm(theta))
    return tanh_over_s(s) * theta


def potential(theta) -> float:
    """Log-partition ``psi(theta) = ln(2 cosh|theta|)``, overflow-safe.

    Evaluated as ``|theta| + log1p(exp(-2|theta|))`` so large ``|theta|`` never
    overflows; at ``theta = 0`` this is ``ln 2``.
    """
    theta = as_vector3(theta, "theta")
    s = float(np.linalg.norm(theta))
    return s + float(np.log1p(np.exp(-2.0 * s)))


def to_density(a) -> np.ndarray:
    """Density matrix ``rho = (I + a . sigma) / 2`` for ``|a| <= 1``."""
    a = as_vector3(a, "bloch vector")
    r = float(np.linalg.norm(a))
    if r > 1.0 + 1e-12:
        raise BoundaryError(f"bloch vector has norm {r:.17g} > 1")
    return 0.5 * (IDENTITY_2 + np.einsum("i,ijk->jk", a, PAULI))


def from_density(rho) -> np.ndarray:
    """Bloch vector ``a_mu = Tr[rho sigma_mu]`` of a valid density matrix."""
    rho = np.asarray(rho, dtype=complex)
    validate_density(rho, atol=1e-9)
    a = np.einsum("jk,ikj->i", rho, PAULI)
    return a.real.astype(float)


def validate_density(rho: np.ndarray, *, atol: float = 1e-12) -> None:
    """Raise unless ``rho`` is a 2x2 density matrix within ``atol``."""
    if rho.shape != (2, 2):
        raise ValueError(f"density matrix must be 2x2, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=atol, rtol=0.0):
        raise ValueError(f"density matrix is not Hermitian within {atol:g}")
    if abs(complex(np.trace(rho)).real - 1.0) > atol or abs(complex(np.trace(rho)).imag) > atol:
        raise ValueError(f"density matrix trace differs from 1 beyond {atol:g}")
    if np.min(np.linalg.eigvalsh(rho)) < -atol:
        raise ValueError("density matrix has a negative eigenvalue")
