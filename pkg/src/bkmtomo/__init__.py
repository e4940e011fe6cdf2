"""Single-qubit GKSL dynamics, BKM information geometry, and non-iterative
process tomography from Bloch-vector time series."""

from .bloch import from_density, from_natural, potential, to_density, to_natural
from .dynamics import (
    GkslModel,
    LindbladSpec,
    NoiseSpec,
    Trajectory,
    add_noise,
    bloch_rhs,
    integrate,
    integrate_affine,
    lindblad_to_bloch_generator,
    rk4_step,
)
from .estimator import (
    EstimateReport,
    GkslRegression,
    MitigationPolicy,
    NormalAccumulator,
    aggregate_trajectories,
    checkpoint_schedule,
    convergence_series,
    design_matrix,
    residual_velocity,
    sample_loss,
    trajectory_velocities,
    velocity_from_samples,
)
from .geometry import (
    SpeedDecomposition,
    canonical_correlation,
    covariance_matrix,
    fd_speed,
    info_speed_sq,
    inverse_metric,
    metric,
    relative_entropy,
)
from .identity import (
    IdentityReport,
    lhs_general,
    lhs_gksl,
    orthogonal_component,
    verify_trajectory,
)
from .validation import BoundaryError

__version__ = "0.1.0"

__all__ = [
    "BoundaryError",
    "EstimateReport",
    "GkslModel",
    "GkslRegression",
    "IdentityReport",
    "LindbladSpec",
    "MitigationPolicy",
    "NoiseSpec",
    "NormalAccumulator",
    "SpeedDecomposition",
    "Trajectory",
    "add_noise",
    "aggregate_trajectories",
    "bloch_rhs",
    "canonical_correlation",
    "checkpoint_schedule",
    "convergence_series",
    "covariance_matrix",
    "design_matrix",
    "fd_speed",
    "from_density",
    "from_natural",
    "info_speed_sq",
    "integrate",
    "integrate_affine",
    "inverse_metric",
    "lhs_general",
    "lhs_gksl",
    "lindblad_to_bloch_generator",
    "metric",
    "orthogonal_component",
    "potential",
    "relative_entropy",
    "residual_velocity",
    "rk4_step",
    "sample_loss",
    "to_density",
    "to_natural",
    "trajectory_velocities",
    "velocity_from_samples",
    "verify_trajectory",
]
