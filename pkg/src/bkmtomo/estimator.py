"""Non-iterative recovery of GKSL parameters from Bloch time series.

The model velocity is linear in the unknown parameter vector
``p = (e1, e2, e3, d1, d2, d3)``:

    v_model(a) = H(a) p,

    H(a) = [[   0,  2a3, -2a2, -2a1,    0,    0],
            [-2a3,    0,  2a1,    0, -2a2,    0],
            [ 2a2, -2a1,    0,    0,    0, -2a3]].

Weighting the squared residual velocity with the inverse BKM metric gives the
per-sample loss ``J2 = dv^T G^{-1}(a) dv``; summing over samples and setting
the gradient to zero yields the normal equations

    A p* = b,   A = sum_t H^T G^{-1} H,   b = sum_t H^T G^{-1} a_dot.

:class:`NormalAccumulator` maintains (A, b) as a mergeable running sum, so
samples from many trajectories and many workers aggregate into one solve.
Near the pure-state boundary the weights diverge; samples with
``|a| > 1 - eps_excl`` are excluded (counted, never silently clamped).

The optional extended mode appends the affine drift ``(c1, c2, c3)`` to the
parameter vector by extending ``H`` with the 3x3 identity.

:class:`GkslRegression` wraps the same machinery in a scikit-learn style
``fit`` / ``predict`` estimator.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator

from .bloch import SERIES_RADIUS
from .dynamics import GkslModel, Trajectory
from .validation import BoundaryError, as_bloch_batch, as_vector3

#: Condition number of the normal matrix above which the solver falls back to
#: an eigenvalue-truncated pseudo-inverse and flags the estimate.
CONDITION_LIMIT = 1e12

#: Eigenvalues below this fraction of the largest are treated as null space.
EIGENVALUE_CUTOFF = 1e-12

_MODE_SIZE = {"standard": 6, "extended": 9}


@dataclass(frozen=True)
class MitigationPolicy:
    """Boundary handling for the regression weights.

    ``eps_excl``: samples with ``|a| > 1 - eps_excl`` are skipped entirely.
    ``weight_cap``: optional ceiling on the eigenvalues of the inverse-metric
    weight matrix; off by default.
    """

    eps_excl: float = 1e-3
    weight_cap: float | None = None

    def __post_init__(self):
        if not 0.0 < self.eps_excl < 1.0:
            raise ValueError("eps_excl must lie in (0, 1)")
        if self.weight_cap is not None and self.weight_cap <= 0.0:
            raise ValueError("weight_cap must be positive when given")


def _require_mode(mode: str) -> int:
    try:
        return _MODE_SIZE[mode]
    except KeyError:
        raise ValueError(f"unknown estimator mode {mode!r}") from None


def design_matrix(a, mode: str = "standard") -> np.ndarray:
    """State-dependent 3xk matrix with ``design_matrix(a) @ p = v_model(a)``."""
    a = as_vector3(a, "bloch vector")
    return _design_batch(a[None, :], mode)[0]


def _design_batch(states: np.ndarray, mode: str) -> np.ndarray:
    k = _require_mode(mode)
    n = states.shape[0]
    a1, a2, a3 = states[:, 0], states[:, 1], states[:, 2]
    h = np.zeros((n, 3, k))
    h[:, 0, 1] = 2.0 * a3
    h[:, 0, 2] = -2.0 * a2
    h[:, 0, 3] = -2.0 * a1
    h[:, 1, 0] = -2.0 * a3
    h[:, 1, 2] = 2.0 * a1
    h[:, 1, 4] = -2.0 * a2
    h[:, 2, 0] = 2.0 * a2
    h[:, 2, 1] = -2.0 * a1
    h[:, 2, 5] = -2.0 * a3
    if k == 9:
        h[:, 0, 6] = 1.0
        h[:, 1, 7] = 1.0
        h[:, 2, 8] = 1.0
    return h


def _inverse_metric_weights(
    states: np.ndarray, weight_cap: float | None
) -> np.ndarray:
    """Inverse-metric weight matrices, shape (n, 3, 3), optionally capped."""
    r = np.linalg.norm(states, axis=1)
    f_tan = np.empty_like(r)
    small = r < SERIES_RADIUS
    r2s = r[small] * r[small]
    f_tan[small] = 1.0 + r2s / 3.0 + r2s * r2s / 5.0
    rb = r[~small]
    f_tan[~small] = np.arctanh(rb) / rb
    f_rad = 1.0 / (1.0 - r * r)
    if weight_cap is not None:
        f_tan = np.minimum(f_tan, weight_cap)
        f_rad = np.minimum(f_rad, weight_cap)
    unit = np.zeros_like(states)
    nonzero = r > 0.0
    unit[nonzero] = states[nonzero] / r[nonzero, None]
    proj = unit[:, :, None] * unit[:, None, :]
    eye = np.eye(3)[None, :, :]
    return f_tan[:, None, None] * (eye - proj) + f_rad[:, None, None] * proj


def velocity_from_samples(traj: Trajectory) -> np.ndarray:
    """Observed velocities by second-order finite differences.

    Central stencil at interior nodes, three-point one-sided stencils at the
    two endpoints; needs at least three samples on a uniform grid.
    """
    if len(traj) < 3:
        raise ValueError("finite-difference velocities need at least 3 samples")
    dt = traj.dt
    a = traj.a
    v = np.empty_like(a)
    v[1:-1] = (a[2:] - a[:-2]) / (2.0 * dt)
    # one-sided stencils in difference form (exact zero on constant data)
    v[0] = (4.0 * (a[1] - a[0]) - (a[2] - a[0])) / (2.0 * dt)
    v[-1] = (-4.0 * (a[-2] - a[-1]) + (a[-3] - a[-1])) / (2.0 * dt)
    return v


def trajectory_velocities(traj: Trajectory, source: str = "auto") -> np.ndarray:
    """Pick the velocity samples for a trajectory.

    ``"exact"`` uses the stored model velocities (error if absent), ``"auto"``
    prefers them when present, ``"finite-difference"`` always differentiates
    the samples.
    """
    if source == "exact" or (source == "auto" and traj.v_exact is not None):
        if traj.v_exact is None:
            raise ValueError("exact velocities requested but not stored")
        return traj.v_exact
    if source in ("auto", "finite-difference"):
        return velocity_from_samples(traj)
    raise ValueError(f"unknown velocity source {source!r}")


def residual_velocity(p, a, a_dot) -> np.ndarray:
    """``a_dot - H(a) p`` for a parameter vector of length 6 or 9."""
    p = np.asarray(p, dtype=float)
    mode = "standard" if p.shape == (6,) else "extended"
    if p.shape not in ((6,), (9,)):
        raise ValueError(f"parameter vector must have 6 or 9 entries, got {p.shape}")
    a_dot = as_vector3(a_dot, "a_dot")
    return a_dot - design_matrix(a, mode) @ p


def sample_loss(p, a, a_dot, policy: MitigationPolicy | None = None) -> float:
    """Per-sample loss ``dv^T G^{-1}(a) dv``; zero iff the residual vanishes."""
    a = as_vector3(a, "bloch vector")
    r = float(np.linalg.norm(a))
    eps = policy.eps_excl if policy is not None else 0.0
    if r > 1.0 - max(eps, 1e-12):
        raise BoundaryError(f"state with |a| = {r:.17g} is inside the exclusion band")
    cap = policy.weight_cap if policy is not None else None
    w = _inverse_metric_weights(a[None, :], cap)[0]
    dv = residual_velocity(p, a, a_dot)
    return float(dv @ w @ dv)


class NormalAccumulator:
    """Running normal equations ``A p = b`` over weighted velocity samples.

    Each included sample adds the Gram term ``H^T G^{-1} H`` to ``A`` and
    ``H^T G^{-1} a_dot`` to ``b``; the weighted squared velocity is kept as
    well so the total loss can be recomputed at the solution without
    retaining the raw data.  Accumulators over disjoint data merge by
    addition, in any order, so per-worker accumulation followed by an ordered
    merge reproduces sequential accumulation up to float reassociation.
    """

    def __init__(self, mode: str = "standard"):
        self.mode = mode
        k = _require_mode(mode)
        self.a_matrix = np.zeros((k, k))
        self.b_vector = np.zeros(k)
        self.vel_sq = 0.0
        self.n_samples = 0
        self.n_excluded = 0

    @property
    def k(self) -> int:
        return _MODE_SIZE[self.mode]

    def accumulate(self, a, a_dot, policy: MitigationPolicy | None = None) -> "NormalAccumulator":
        """Add one (state, velocity) sample, or count it as excluded."""
        a = as_vector3(a, "bloch vector")
        a_dot = as_vector3(a_dot, "a_dot")
        return self.accumulate_batch(a[None, :], a_dot[None, :], policy)

    def accumulate_batch(
        self, states, velocities, policy: MitigationPolicy | None = None
    ) -> "NormalAccumulator":
        """Add many samples at once (same result as repeated ``accumulate``)."""
        policy = policy or MitigationPolicy()
        states = as_bloch_batch(states, "states")
        velocities = np.asarray(velocities, dtype=float)
        if velocities.shape != states.shape:
            raise ValueError("states and velocities disagree in shape")
        terms_a, terms_b, terms_s, included = _sample_terms(
            states, velocities, self.mode, policy
        )
        self.a_matrix += terms_a.sum(axis=0)
        self.b_vector += terms_b.sum(axis=0)
        self.vel_sq += float(terms_s.sum())
        n_inc = int(np.count_nonzero(included))
        self.n_samples += n_inc
        self.n_excluded += states.shape[0] - n_inc
        return self

    def merge(self, other: "NormalAccumulator") -> "NormalAccumulator":
        if other.mode != self.mode:
            raise ValueError("cannot merge accumulators with different modes")
        self.a_matrix += other.a_matrix
        self.b_vector += other.b_vector
        self.vel_sq += other.vel_sq
        self.n_samples += other.n_samples
        self.n_excluded += other.n_excluded
        return self

    def solve(self) -> "EstimateReport":
        """Solve the accumulated system; flags rather than crashes on rank loss."""
        if self.n_samples < 1:
            raise ValueError("cannot solve without accumulated samples")
        return _solve_normal(
            self.a_matrix,
            self.b_vector,
            self.vel_sq,
            self.n_samples,
            self.n_excluded,
            self.mode,
        )


def _sample_terms(
    states: np.ndarray,
    velocities: np.ndarray,
    mode: str,
    policy: MitigationPolicy,
):
    """Per-sample normal-equation contributions, zeroed for excluded samples."""
    k = _require_mode(mode)
    n = states.shape[0]
    included = np.linalg.norm(states, axis=1) <= 1.0 - policy.eps_excl
    terms_a = np.zeros((n, k, k))
    terms_b = np.zeros((n, k))
    terms_s = np.zeros(n)
    if np.any(included):
        sub = states[included]
        vel = velocities[included]
        h = _design_batch(sub, mode)
        w = _inverse_metric_weights(sub, policy.weight_cap)
        ta = np.einsum("nia,nij,njb->nab", h, w, h)
        terms_a[included] = 0.5 * (ta + ta.transpose(0, 2, 1))
        terms_b[included] = np.einsum("nia,nij,nj->na", h, w, vel)
        terms_s[included] = np.einsum("ni,nij,nj->n", vel, w, vel)
    return terms_a, terms_b, terms_s, included


@dataclass(frozen=True)
class EstimateReport:
    """Solved parameters plus conditioning diagnostics."""

    p_star: np.ndarray
    mode: str
    loss: float
    condition_number: float
    rank_deficient: bool
    n_samples: int
    n_excluded: int

    @property
    def e(self) -> np.ndarray:
        return self.p_star[:3]

    @property
    def d(self) -> np.ndarray:
        return self.p_star[3:6]

    @property
    def c(self) -> np.ndarray:
        if self.mode == "extended":
            return self.p_star[6:9]
        return np.zeros(3)

    def model(self) -> GkslModel:
        return GkslModel(e=self.e, d=self.d, c=self.c)


def _solve_normal(
    a_matrix: np.ndarray,
    b_vector: np.ndarray,
    vel_sq: float,
    n_samples: int,
    n_excluded: int,
    mode: str,
) -> EstimateReport:
    eigvals = np.linalg.eigvalsh(a_matrix)
    lam_max = float(eigvals[-1])
    lam_min = float(eigvals[0])
    condition = lam_max / lam_min if lam_min > 0.0 else np.inf
    p = None
    rank_deficient = True
    if np.isfinite(condition) and condition <= CONDITION_LIMIT:
        try:
            p = scipy.linalg.cho_solve(scipy.linalg.cho_factor(a_matrix), b_vector)
            rank_deficient = False
        except scipy.linalg.LinAlgError:
            p = None
    if p is None:
        w, v = np.linalg.eigh(a_matrix)
        keep = w > EIGENVALUE_CUTOFF * max(lam_max, 0.0)
        p = np.zeros(b_vector.shape)
        if np.any(keep):
            vk = v[:, keep]
            p = vk @ ((vk.T @ b_vector) / w[keep])
    loss = vel_sq - 2.0 * float(b_vector @ p) + float(p @ a_matrix @ p)
    return EstimateReport(
        p_star=p,
        mode=mode,
        loss=max(loss, 0.0),
        condition_number=condition,
        rank_deficient=rank_deficient,
        n_samples=n_samples,
        n_excluded=n_excluded,
    )


def aggregate_trajectories(
    trajs,
    policy: MitigationPolicy | None = None,
    mode: str = "standard",
    velocity_source: str = "auto",
    workers: int = 1,
) -> NormalAccumulator:
    """One accumulator over many trajectories.

    Each trajectory is accumulated independently and the partial accumulators
    are merged in input order, so the result does not depend on the number of
    workers.
    """
    trajs = list(trajs)
    if not trajs:
        raise ValueError("need at least one trajectory")
    policy = policy or MitigationPolicy()

    def one(traj: Trajectory) -> NormalAccumulator:
        acc = NormalAccumulator(mode)
        acc.accumulate_batch(traj.a, trajectory_velocities(traj, velocity_source), policy)
        return acc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, trajs))
    else:
        parts = [one(traj) for traj in trajs]
    total = NormalAccumulator(mode)
    for part in parts:
        total.merge(part)
    return total


def checkpoint_schedule(n_total: int) -> list[int]:
    """Powers of two up to ``n_total``, plus the final count."""
    if n_total < 1:
        return []
    points = []
    c = 1
    while c < n_total:
        points.append(c)
        c *= 2
    points.append(n_total)
    return points


def convergence_series(
    trajs,
    policy: MitigationPolicy | None = None,
    mode: str = "standard",
    velocity_source: str = "auto",
    checkpoints=None,
) -> list[tuple[int, EstimateReport]]:
    """Estimates after growing prefixes of the sample stream.

    Samples are replayed in time order, trajectory by trajectory in the order
    given; an estimate is emitted after each checkpoint count (powers of two
    plus the final count by default).  Prefixes below rank completion yield
    flagged, not fatal, reports.
    """
    trajs = list(trajs)
    if not trajs:
        raise ValueError("need at least one trajectory")
    policy = policy or MitigationPolicy()
    all_a, all_b, all_s, all_inc = [], [], [], []
    for traj in trajs:
        vel = trajectory_velocities(traj, velocity_source)
        ta, tb, ts, inc = _sample_terms(traj.a, vel, mode, policy)
        all_a.append(ta)
        all_b.append(tb)
        all_s.append(ts)
        all_inc.append(inc)
    cum_a = np.cumsum(np.concatenate(all_a), axis=0)
    cum_b = np.cumsum(np.concatenate(all_b), axis=0)
    cum_s = np.cumsum(np.concatenate(all_s))
    cum_inc = np.cumsum(np.concatenate(all_inc).astype(int))
    n_total = cum_inc.shape[0]
    if checkpoints is None:
        checkpoints = checkpoint_schedule(n_total)
    series = []
    for n_points in checkpoints:
        if not 1 <= n_points <= n_total:
            raise ValueError(f"checkpoint {n_points} outside 1..{n_total}")
        idx = n_points - 1
        n_inc = int(cum_inc[idx])
        report = _solve_normal(
            cum_a[idx], cum_b[idx], float(cum_s[idx]), n_inc, n_points - n_inc, mode
        )
        series.append((n_points, report))
    return series


class GkslRegression(BaseEstimator):
    """Scikit-learn style front end for the weighted linear regression.

    Parameters mirror :class:`MitigationPolicy` plus the estimator mode and
    velocity source.  ``fit`` accepts one :class:`Trajectory` or a sequence
    of them; ``predict`` maps Bloch states to fitted model velocities.

    Attributes after ``fit``: ``report_`` (full :class:`EstimateReport`),
    ``p_``, ``e_``, ``d_``, ``c_``, ``model_``.
    """

    def __init__(
        self,
        mode: str = "standard",
        eps_excl: float = 1e-3,
        weight_cap: float | None = None,
        velocity_source: str = "auto",
        workers: int = 1,
    ):
        self.mode = mode
        self.eps_excl = eps_excl
        self.weight_cap = weight_cap
        self.velocity_source = velocity_source
        self.workers = workers

    def fit(self, X, y=None) -> "GkslRegression":
        trajs = [X] if isinstance(X, Trajectory) else list(X)
        policy = MitigationPolicy(eps_excl=self.eps_excl, weight_cap=self.weight_cap)
        acc = aggregate_trajectories(
            trajs,
            policy=policy,
            mode=self.mode,
            velocity_source=self.velocity_source,
            workers=self.workers,
        )
        self.accumulator_ = acc
        self.report_ = acc.solve()
        self.p_ = self.report_.p_star
        self.e_ = self.report_.e
        self.d_ = self.report_.d
        self.c_ = self.report_.c
        self.model_ = self.report_.model()
        return self

    def predict(self, X) -> np.ndarray:
        """Fitted model velocities at the given Bloch states, shape (n, 3)."""
        if not hasattr(self, "report_"):
            raise RuntimeError("estimator is not fitted")
        states = as_bloch_batch(X, "states")
        m = self.model_
        return 2.0 * np.cross(m.e, states) - 2.0 * states * m.d + m.c
