"""Bogoliubov-Kubo-Mori (BKM) geometry of the qubit state space.

The BKM metric in Bloch coordinates is

    g(a) = (|a| / arctanh|a|) (I - P) + (1 - |a|^2) P,     P = a a^T / |a|^2,

with inverse

    g^{-1}(a) = (arctanh|a| / |a|) (I - P) + P / (1 - |a|^2).

``g`` is simultaneously the Hessian of the log-partition potential at the
natural parameters of ``a`` and the Kubo-Mori covariance of the Pauli
operators; :func:`covariance_matrix` evaluates the latter directly through
the canonical correlation and serves as the slow, independent oracle for the
closed form.

The squared information-geometric speed of a trajectory,
``a_dot^T g^{-1}(a) a_dot``, splits into a radial part (purity change) and an
angular part (rotation), and equals ``lim 2 D(rho_t || rho_{t+dt}) / dt^2``.
Both sides are available here (:func:`info_speed_sq`, :func:`fd_speed`).

All operations reject states with ``|a| >= 1 - 1e-12``: the inverse metric is
singular on the pure-state boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bloch import IDENTITY_2, PAULI, arctanh_over_r, potential, to_density, to_natural
from .validation import as_hermitian, as_mixed_bloch, as_vector3

# Relative eigenvalue gap below which the logarithmic mean switches to its
# symmetric series; removes the 0/0 without a branch discontinuity.
_LOGMEAN_SWITCH = 1e-8


def metric_factors(r: float) -> tuple[float, float]:
    """Tangential and radial eigenvalues of the BKM metric at radius ``r``."""
    return 1.0 / arctanh_over_r(r), 1.0 - r * r


def inverse_metric_factors(r: float) -> tuple[float, float]:
    """Tangential and radial eigenvalues of the inverse BKM metric."""
    return arctanh_over_r(r), 1.0 / (1.0 - r * r)


def _radial_tangential(a: np.ndarray, f_tan: float, f_rad: float) -> np.ndarray:
    r2 = float(a @ a)
    if r2 == 0.0:
        # Both factors tend to 1 at the center; the metric is Euclidean there.
        return f_tan * np.eye(3)
    proj = np.outer(a, a) / r2
    return f_tan * (np.eye(3) - proj) + f_rad * proj


def metric(a) -> np.ndarray:
    """BKM metric matrix at ``a``; identity at the center, rejects ``|a| -> 1``."""
    a = as_mixed_bloch(a)
    f_tan, f_rad = metric_factors(float(np.linalg.norm(a)))
    return _radial_tangential(a, f_tan, f_rad)


def inverse_metric(a) -> np.ndarray:
    """Inverse BKM metric matrix at ``a``; ``metric(a) @ inverse_metric(a) = I``."""
    a = as_mixed_bloch(a)
    f_tan, f_rad = inverse_metric_factors(float(np.linalg.norm(a)))
    return _radial_tangential(a, f_tan, f_rad)


def logarithmic_mean(p: float, q: float) -> float:
    """``(p - q) / (ln p - ln q)`` for p, q > 0, continued by ``p`` at p = q.

    Evaluated as ``(p + q)/2 * z / arctanh(z)`` with ``z = (p - q)/(p + q)``,
    which is free of the log cancellation of the direct quotient; close pairs
    use the symmetric series instead.
    """
    if p <= 0.0 or q <= 0.0:
        raise ValueError("logarithmic mean requires positive arguments")
    s = p + q
    z = (p - q) / s
    if abs(z) < _LOGMEAN_SWITCH:
        return 0.5 * s * (1.0 - z * z / 3.0)
    return 0.5 * s * z / float(np.arctanh(z))


def canonical_correlation(a, x, y) -> float:
    """Kubo-Mori inner product of two Hermitian operators in the state ``a``.

    In the eigenbasis of ``rho(a)`` with eigenvalues ``lam_i``,

        <X, Y>_cc = sum_ij m(lam_i, lam_j) X_ij Y_ji,

    where ``m`` is the logarithmic mean.  Equals the integral
    ``int_0^1 ds Tr[rho^s X rho^{1-s} Y]``; used as the slow oracle behind
    :func:`covariance_matrix`.
    """
    a = as_mixed_bloch(a)
    x = as_hermitian(x, atol=1e-10, name="X")
    y = as_hermitian(y, atol=1e-10, name="Y")
    lam, u = np.linalg.eigh(to_density(a))
    xt = u.conj().T @ x @ u
    yt = u.conj().T @ y @ u
    weights = np.array(
        [[logarithmic_mean(float(p), float(q)) for q in lam] for p in lam]
    )
    value = complex(np.sum(weights * xt * yt.T))
    return float(value.real)


def covariance_matrix(a) -> np.ndarray:
    """Kubo-Mori covariance of the centered Pauli operators; equals ``metric(a)``."""
    a = as_mixed_bloch(a)
    deltas = [PAULI[i] - a[i] * IDENTITY_2 for i in range(3)]
    xi = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            xi[i, j] = canonical_correlation(a, deltas[i], deltas[j])
            xi[j, i] = xi[i, j]
    return xi


def relative_entropy(a1, a2) -> float:
    """Quantum relative entropy ``D(rho1 || rho2)`` between two mixed states.

    Closed form in natural coordinates:
    ``(theta1 - theta2) . a1 - psi(theta1) + psi(theta2)``.
    """
    a1 = as_mixed_bloch(a1, name="first state")
    a2 = as_mixed_bloch(a2, name="second state")
    th1 = to_natural(a1)
    th2 = to_natural(a2)
    return float((th1 - th2) @ a1) - potential(th1) + potential(th2)


@dataclass(frozen=True)
class SpeedDecomposition:
    """Squared information speed split into purity-change and rotation parts.

    ``total = radial + angular`` holds by construction;
    ``total = a_dot^T g^{-1}(a) a_dot``.
    """

    radial: float
    angular: float
    total: float


def info_speed_sq(a, a_dot) -> SpeedDecomposition:
    """Squared BKM speed of a state moving with Euclidean velocity ``a_dot``.

    radial  = (d|a|/dt)^2 / (1 - |a|^2)        with d|a|/dt = (a . a_dot)/|a|
    angular = (arctanh|a| / |a|^3) |a x a_dot|^2

    At the exact center the radial direction is undefined; the full speed
    ``|a_dot|^2`` is then reported as angular.
    """
    a = as_mixed_bloch(a)
    a_dot = as_vector3(a_dot, "a_dot")
    r2 = float(a @ a)
    if r2 == 0.0:
        speed = float(a_dot @ a_dot)
        return SpeedDecomposition(0.0, speed, speed)
    radial = float(a @ a_dot) ** 2 / (r2 * (1.0 - r2))
    cross = np.cross(a, a_dot)
    angular = arctanh_over_r(float(np.sqrt(r2))) * float(cross @ cross) / r2
    return SpeedDecomposition(radial, angular, radial + angular)


def fd_speed(a_t, a_tdt, dt: float) -> float:
    """Discrete divergence rate ``2 D(rho_t || rho_{t+dt}) / dt^2``.

    Converges to ``info_speed_sq(a, a_dot).total`` first-order in ``dt`` along
    a differentiable trajectory.  Forward (asymmetric) divergence on purpose.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return 2.0 * relative_entropy(a_t, a_tdt) / (dt * dt)
