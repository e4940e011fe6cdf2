"""GKSL dynamics of the Bloch vector and trajectory generation.

With Hamiltonian ``H = e . sigma`` and diagonal dissipation rates
``d = (d1, d2, d3)`` the Bloch vector obeys

    a_dot = 2 e x a - 2 diag(d) a + c,

where the affine drift ``c`` vanishes for unital channels (the default).
Trajectories are integrated with fixed-step classical RK4 and carry the exact
model velocities at every node, so estimators can be tested both against
exact and against finite-difference velocities.

:func:`lindblad_to_bloch_generator` builds the general affine generator
``a_dot = Lambda a + c`` from explicit Lindblad operators by applying the
GKSL superoperator to the Pauli basis; it exists as an oracle for the
diagonal model above and for inspecting non-unital channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bloch import PAULI
from .validation import BoundaryError, as_bloch_batch, as_vector3, require_uniform_grid

# Stream-splitting rule for all measurement noise in the package: trajectory
# number ``i`` draws from PCG64 seeded with SeedSequence(seed, spawn_key=(i,)).
RNG_NAME = "pcg64-seedseq"

#: Radius to which out-of-ball noisy samples are radially projected.
PROJECTION_RADIUS = 1.0 - 1e-9


@dataclass(frozen=True)
class GkslModel:
    """Generator of single-qubit GKSL dynamics in Bloch form.

    ``e``: Hamiltonian coefficients (H = e . sigma), units 1/time.
    ``d``: diagonal dissipation rates, units 1/time.  Physical (Markovian)
    models have ``d_i >= 0``; the estimator may legitimately return negative
    entries as a diagnostic, so no sign constraint is enforced here.
    ``c``: affine drift, zero for unital channels.
    """

    e: np.ndarray
    d: np.ndarray
    c: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "e", as_vector3(self.e, "e"))
        object.__setattr__(self, "d", as_vector3(self.d, "d"))
        object.__setattr__(self, "c", as_vector3(self.c, "c"))

    @property
    def is_unital(self) -> bool:
        return bool(np.all(self.c == 0.0))

    def params(self, mode: str = "standard") -> np.ndarray:
        """Parameter vector (e1, e2, e3, d1, d2, d3[, c1, c2, c3])."""
        if mode == "standard":
            return np.concatenate([self.e, self.d])
        if mode == "extended":
            return np.concatenate([self.e, self.d, self.c])
        raise ValueError(f"unknown mode {mode!r}")

    @classmethod
    def from_params(cls, p) -> "GkslModel":
        p = np.asarray(p, dtype=float)
        if p.shape == (6,):
            return cls(e=p[:3], d=p[3:6])
        if p.shape == (9,):
            return cls(e=p[:3], d=p[3:6], c=p[6:9])
        raise ValueError(f"parameter vector must have 6 or 9 entries, got {p.shape}")


def bloch_rhs(model: GkslModel, a) -> np.ndarray:
    """Model velocity ``2 e x a - 2 diag(d) a + c`` at the state ``a``."""
    a = np.asarray(a, dtype=float)
    return 2.0 * np.cross(model.e, a) - 2.0 * model.d * a + model.c


def rk4_step(model: GkslModel, a: np.ndarray, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of size ``dt``."""
    k1 = bloch_rhs(model, a)
    k2 = bloch_rhs(model, a + 0.5 * dt * k1)
    k3 = bloch_rhs(model, a + 0.5 * dt * k2)
    k4 = bloch_rhs(model, a + dt * k3)
    return a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled Bloch time series, optionally with exact velocities.

    ``t``: shape (n,) increasing uniform grid.
    ``a``: shape (n, 3) Bloch samples.
    ``v_exact``: shape (n, 3) model velocities at the samples, or None for
    data that has no underlying model attached (e.g. after adding noise).
    ``meta``: flat provenance mapping (model tag, seed, noise level, ...).
    """

    t: np.ndarray
    a: np.ndarray
    v_exact: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        a = as_bloch_batch(self.a, "trajectory samples")
        if t.shape != (a.shape[0],):
            raise ValueError("time grid and samples disagree in length")
        if t.size >= 2:
            require_uniform_grid(t)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "a", a)
        if self.v_exact is not None:
            v = as_bloch_batch(self.v_exact, "trajectory velocities")
            if v.shape != a.shape:
                raise ValueError("velocities and samples disagree in shape")
            object.__setattr__(self, "v_exact", v)

    def __len__(self) -> int:
        return self.t.size

    @property
    def dt(self) -> float:
        return require_uniform_grid(self.t)


def integrate(model: GkslModel, a0, dt: float, n_steps: int) -> Trajectory:
    """Integrate the model with fixed-step RK4 from ``a0``.

    Returns ``n_steps + 1`` samples including the initial one, with the exact
    model velocity stored at every node.  Aborts if the state reaches or
    leaves the unit ball after the initial node (impossible for ``d_i >= 0``,
    ``c = 0``; this guards misuse such as negative rates).
    """
    a0 = as_vector3(a0, "a0")
    r0 = float(np.linalg.norm(a0))
    if r0 > 1.0:
        raise BoundaryError(f"initial state has norm {r0:.17g} > 1")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    samples = np.empty((n_steps + 1, 3))
    samples[0] = a0
    a = a0
    for k in range(1, n_steps + 1):
        a = rk4_step(model, a, dt)
        if float(np.linalg.norm(a)) >= 1.0:
            raise BoundaryError(
                f"trajectory left the Bloch ball at step {k} (|a| = "
                f"{float(np.linalg.norm(a)):.17g}); check the model rates"
            )
        samples[k] = a
    t = dt * np.arange(n_steps + 1)
    v = 2.0 * np.cross(model.e, samples) - 2.0 * samples * model.d + model.c
    return Trajectory(t=t, a=samples, v_exact=v)


@dataclass(frozen=True)
class LindbladSpec:
    """Explicit GKSL data: a 2x2 Hamiltonian and jump operators with rates."""

    hamiltonian: np.ndarray
    jumps: tuple = ()

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if h.shape != (2, 2):
            raise ValueError("hamiltonian must be a 2x2 matrix")
        if not np.allclose(h, h.conj().T, atol=1e-12, rtol=0.0):
            raise ValueError("hamiltonian is not Hermitian within 1e-12")
        jumps = []
        for op, gamma in self.jumps:
            op = np.asarray(op, dtype=complex)
            if op.shape != (2, 2):
                raise ValueError("jump operators must be 2x2 matrices")
            gamma = float(gamma)
            if gamma < 0.0:
                raise ValueError(f"jump rate {gamma:g} is negative")
            jumps.append((op, gamma))
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", tuple(jumps))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """GKSL superoperator ``-i[H, x] + sum_k gamma_k D_k(x)``."""
        h = self.hamiltonian
        out = -1.0j * (h @ x - x @ h)
        for op, gamma in self.jumps:
            opd = op.conj().T
            anticomm = opd @ op @ x + x @ opd @ op
            out = out + gamma * (op @ x @ opd - 0.5 * anticomm)
        return out


def lindblad_to_bloch_generator(spec: LindbladSpec) -> tuple[np.ndarray, np.ndarray]:
    """Affine Bloch generator ``(Lambda, c)`` of an explicit GKSL model.

    ``Lambda_ij = Tr[L(sigma_j) sigma_i] / 2`` is obtained by applying the
    superoperator to the Pauli basis.  The affine vector follows the
    commutators of the jump operators,

        c_i = (1/4) sum_k gamma_k Tr([L_k, L_k^dag] sigma_i),

    so Hermitian jumps (unital channels) give ``c = 0`` and a lowering
    operator gives a drift of magnitude ``gamma/2`` along z, with the sign
    fixed by the supplied matrix convention (sigma_minus = (sigma_x -
    i sigma_y)/2 yields ``[sigma_-, sigma_+] = -sigma_z`` and hence a
    negative-z drift).
    """
    lam = np.empty((3, 3))
    for j in range(3):
        image = spec.apply(PAULI[j])
        for i in range(3):
            val = 0.5 * complex(np.trace(image @ PAULI[i]))
            lam[i, j] = val.real
    c = np.zeros(3)
    for op, gamma in spec.jumps:
        comm = op @ op.conj().T - op.conj().T @ op
        for i in range(3):
            c[i] += 0.25 * gamma * complex(np.trace(comm @ PAULI[i])).real
    return lam, c


def integrate_affine(lam: np.ndarray, c: np.ndarray, a0, dt: float, n_steps: int) -> Trajectory:
    """RK4 integration of the general affine system ``a_dot = Lambda a + c``.

    Oracle companion to :func:`integrate`; not wired into the estimator,
    whose regression design covers the diagonal-dissipation model only.
    """
    lam = np.asarray(lam, dtype=float)
    c = as_vector3(c, "c")
    a0 = as_vector3(a0, "a0")
    if dt <= 0.0:
        raise ValueError("dt must be positive")

    def rhs(a):
        return lam @ a + c

    samples = np.empty((n_steps + 1, 3))
    samples[0] = a0
    a = a0
    for k in range(1, n_steps + 1):
        k1 = rhs(a)
        k2 = rhs(a + 0.5 * dt * k1)
        k3 = rhs(a + 0.5 * dt * k2)
        k4 = rhs(a + dt * k3)
        a = a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        samples[k] = a
    t = dt * np.arange(n_steps + 1)
    return Trajectory(t=t, a=samples, v_exact=samples @ lam.T + c)


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement noise: i.i.d. Gaussian perturbations of stored samples.

    ``boundary_policy`` decides what happens to samples pushed out of the
    unit ball: ``"project"`` moves them radially back to norm
    ``1 - 1e-9`` (counted and reported), ``"reject"`` raises instead.
    """

    sigma: float
    seed: int = 0
    boundary_policy: str = "project"

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.boundary_policy not in ("project", "reject"):
            raise ValueError(f"unknown boundary policy {self.boundary_policy!r}")


def noise_rng(seed: int, stream: int) -> np.random.Generator:
    """Per-trajectory generator under the documented stream-splitting rule."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,)))
    )


def add_noise(traj: Trajectory, noise: NoiseSpec, stream: int = 0) -> Trajectory:
    """Perturb every sample component with Gaussian noise of std ``sigma``.

    Deterministic given ``(noise.seed, stream)``.  The exact velocities are
    dropped: noisy data has none.  Out-of-ball samples are handled per the
    noise spec's boundary policy; the number of projected samples is recorded
    in the returned trajectory's ``meta["n_projected"]``.
    """
    rng = noise_rng(noise.seed, stream)
    noisy = traj.a + noise.sigma * rng.standard_normal(traj.a.shape)
    norms = np.linalg.norm(noisy, axis=1)
    outside = norms >= 1.0
    n_projected = int(np.count_nonzero(outside))
    if n_projected and noise.boundary_policy == "reject":
        raise BoundaryError(f"{n_projected} noisy samples left the Bloch ball")
    if n_projected:
        noisy[outside] *= (PROJECTION_RADIUS / norms[outside])[:, None]
    meta = dict(traj.meta)
    meta.update(
        rng=RNG_NAME,
        seed=noise.seed,
        stream=stream,
        sigma=noise.sigma,
        boundary_policy=noise.boundary_policy,
        n_projected=n_projected,
    )
    return Trajectory(t=traj.t.copy(), a=noisy, v_exact=None, meta=meta)
