"""Numerical verification of the qubit information-geometric identity.

For any smooth mixed-state trajectory the squared BKM speed (radial plus
angular form) equals the small-step limit of twice the relative entropy over
the squared step.  Specialized to GKSL dynamics with diagonal dissipation the
left side becomes an explicit function of the model parameters:

    4 (a^T D a)^2 / (|a|^2 (1 - |a|^2))
        + (4 arctanh|a| / |a|^3) | |a|^2 e_perp - a x (D a) |^2,

with ``e_perp`` the component of the Hamiltonian vector orthogonal to ``a``.
The verifier checks, sample by sample along a trajectory, that

* the GKSL-specialized form agrees with the general kinematic form at
  machine scale (the two are the same quantity algebraically), and
* the finite-step divergence rate converges to both, first order in the
  probe step ``dt_fd`` (checked by halving the step, not by one tolerance).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import GkslModel, Trajectory, bloch_rhs, rk4_step
from .geometry import fd_speed, info_speed_sq
from .bloch import arctanh_over_r
from .validation import as_mixed_bloch, as_vector3


def orthogonal_component(e, a) -> np.ndarray:
    """Component of ``e`` orthogonal to ``a``: ``e - ((a.e)/|a|^2) a``."""
    e = as_vector3(e, "e")
    a = as_vector3(a, "a")
    r2 = float(a @ a)
    if r2 == 0.0:
        raise ValueError("orthogonal component is undefined at a = 0")
    return e - (float(a @ e) / r2) * a


def lhs_general(a, a_dot) -> float:
    """Kinematic side of the identity: squared BKM speed of ``(a, a_dot)``."""
    return info_speed_sq(a, a_dot).total


def lhs_gksl(model: GkslModel, a) -> float:
    """Model side of the identity for unital GKSL dynamics at the state ``a``."""
    if not model.is_unital:
        raise ValueError("the specialized identity assumes zero affine drift")
    a = as_mixed_bloch(a)
    r2 = float(a @ a)
    if r2 == 0.0:
        raise ValueError("the specialized identity is undefined at a = 0")
    da = model.d * a
    quad = float(a @ da)
    radial = 4.0 * quad * quad / (r2 * (1.0 - r2))
    w = r2 * orthogonal_component(model.e, a) - np.cross(a, da)
    angular = 4.0 * arctanh_over_r(float(np.sqrt(r2))) * float(w @ w) / r2
    return radial + angular


@dataclass(frozen=True)
class IdentityReport:
    """Per-sample identity checks along a trajectory, plus summary maxima.

    ``err_gen_fd`` compares the kinematic speed against the finite-step
    divergence rate (shrinks linearly in ``dt_fd``); ``err_gksl_gen``
    compares the two algebraically equal sides (machine scale).
    """

    t: np.ndarray
    lhs_general: np.ndarray
    lhs_gksl: np.ndarray
    rhs_fd: np.ndarray
    err_gen_fd: np.ndarray
    err_gksl_gen: np.ndarray
    dt_fd: float
    n_excluded: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def max_err_gen_fd(self) -> float:
        return float(np.max(self.err_gen_fd)) if self.err_gen_fd.size else 0.0

    @property
    def max_err_gksl_gen(self) -> float:
        return float(np.max(self.err_gksl_gen)) if self.err_gksl_gen.size else 0.0


def verify_trajectory(
    model: GkslModel,
    traj: Trajectory,
    dt_fd: float,
    eps_excl: float = 1e-3,
) -> IdentityReport:
    """Check the identity at every interior sample of a noiseless trajectory.

    The divergence side is probed with one RK4 step of size ``dt_fd`` from
    each sample.  Samples inside the boundary band ``|a| > 1 - eps_excl`` (or
    at the center, where the specialized form is undefined) are excluded and
    counted rather than crashing the run.
    """
    if dt_fd <= 0.0:
        raise ValueError("dt_fd must be positive")
    if len(traj) < 3:
        raise ValueError("need at least three samples to have interior ones")
    rows_t, rows_gen, rows_gksl, rows_fd = [], [], [], []
    n_excluded = 0
    for k in range(1, len(traj) - 1):
        a = traj.a[k]
        r = float(np.linalg.norm(a))
        if r > 1.0 - eps_excl or r < 1e-12:
            n_excluded += 1
            continue
        v = traj.v_exact[k] if traj.v_exact is not None else bloch_rhs(model, a)
        gen = lhs_general(a, v)
        gksl = lhs_gksl(model, a)
        ahead = rk4_step(model, a, dt_fd)
        fd = fd_speed(a, ahead, dt_fd)
        rows_t.append(traj.t[k])
        rows_gen.append(gen)
        rows_gksl.append(gksl)
        rows_fd.append(fd)
    gen = np.asarray(rows_gen)
    gksl = np.asarray(rows_gksl)
    fd = np.asarray(rows_fd)
    scale = np.maximum(np.abs(gen), 1e-300)
    return IdentityReport(
        t=np.asarray(rows_t),
        lhs_general=gen,
        lhs_gksl=gksl,
        rhs_fd=fd,
        err_gen_fd=np.abs(gen - fd) / scale,
        err_gksl_gen=np.abs(gksl - gen) / scale,
        dt_fd=dt_fd,
        n_excluded=n_excluded,
        meta={"eps_excl": eps_excl},
    )
