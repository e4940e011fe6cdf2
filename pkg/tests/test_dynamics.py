import numpy as np
import pytest

from bkmtomo import (
    GkslModel,
    LindbladSpec,
    NoiseSpec,
    Trajectory,
    add_noise,
    bloch_rhs,
    integrate,
    integrate_affine,
    lindblad_to_bloch_generator,
)
from bkmtomo.bloch import SIGMA_X, SIGMA_Y, SIGMA_Z
from bkmtomo.dynamics import PROJECTION_RADIUS
from bkmtomo.validation import BoundaryError

from conftest import BENCH_A0, BENCH_D, BENCH_E, random_mixed_state


def test_rhs_of_null_model_vanishes():
    model = GkslModel(e=np.zeros(3), d=np.zeros(3))
    rng = np.random.default_rng(2)
    for _ in range(10):
        np.testing.assert_array_equal(bloch_rhs(model, random_mixed_state(rng)), np.zeros(3))


def test_rhs_pure_rotation():
    model = GkslModel(e=np.array([0.0, 0.0, 1.0]), d=np.zeros(3))
    v = bloch_rhs(model, np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(v, [0.0, 2.0, 0.0], atol=1e-15)


def test_rhs_pure_relaxation():
    model = GkslModel(e=np.zeros(3), d=np.array([0.2, 0.3, 0.1]))
    v = bloch_rhs(model, np.array([0.5, 0.5, 0.5]))
    np.testing.assert_allclose(v, [-0.2, -0.3, -0.1], atol=1e-15)


def test_zero_model_gives_constant_trajectory():
    model = GkslModel(e=np.zeros(3), d=np.zeros(3))
    a0 = np.array([0.1, -0.4, 0.2])
    traj = integrate(model, a0, 1e-2, 50)
    np.testing.assert_array_equal(traj.a, np.tile(a0, (51, 1)))
    np.testing.assert_array_equal(traj.v_exact, np.zeros((51, 3)))


def test_isotropic_decay_matches_closed_form():
    d = 0.3
    a0 = np.array([0.3, -0.5, 0.2])
    traj = integrate(GkslModel(e=np.zeros(3), d=np.full(3, d)), a0, 1e-3, 1000)
    exact = a0[None, :] * np.exp(-2.0 * d * traj.t)[:, None]
    np.testing.assert_allclose(traj.a, exact, atol=1e-10)


def test_benchmark_trajectory_norm_decreases(bench_model):
    traj = integrate(bench_model, BENCH_A0, 1e-3, 2000)
    norms = np.linalg.norm(traj.a, axis=1)
    assert np.all(np.diff(norms) <= 1e-12)
    assert norms[0] == pytest.approx(np.sqrt(0.815**2 + 0.007**2 + 0.466**2), abs=1e-15)


def test_purity_decreases_for_random_physical_models():
    rng = np.random.default_rng(101)
    for _ in range(25):
        model = GkslModel(e=rng.uniform(-2, 2, 3), d=rng.uniform(0, 1, 3))
        traj = integrate(model, random_mixed_state(rng, 0.0, 0.95), 2e-3, 300)
        norms = np.linalg.norm(traj.a, axis=1)
        assert np.all(np.diff(norms) <= 1e-12)
        assert np.all(norms < 1.0)


def test_rk4_error_shrinks_sixteenfold(bench_model):
    ref = integrate(bench_model, BENCH_A0, 1e-3 / 16.0, 16000).a[-1]
    err_coarse = np.linalg.norm(integrate(bench_model, BENCH_A0, 1e-3, 1000).a[-1] - ref)
    err_fine = np.linalg.norm(integrate(bench_model, BENCH_A0, 5e-4, 2000).a[-1] - ref)
    assert err_coarse / err_fine == pytest.approx(16.0, rel=0.25)


def test_exact_velocities_match_rhs(bench_model):
    traj = integrate(bench_model, BENCH_A0, 1e-3, 100)
    for k in (0, 50, 100):
        np.testing.assert_array_equal(traj.v_exact[k], bloch_rhs(bench_model, traj.a[k]))


def test_integrate_aborts_on_growth():
    model = GkslModel(e=np.zeros(3), d=np.full(3, -0.5))
    with pytest.raises(BoundaryError):
        integrate(model, np.array([0.9, 0.0, 0.0]), 1e-2, 100)


def test_integrate_zero_steps():
    traj = integrate(GkslModel(e=BENCH_E, d=BENCH_D), BENCH_A0, 1e-3, 0)
    assert len(traj) == 1
    np.testing.assert_array_equal(traj.a[0], BENCH_A0)


def test_trajectory_rejects_non_uniform_grid():
    with pytest.raises(ValueError):
        Trajectory(t=np.array([0.0, 0.1, 0.3]), a=np.zeros((3, 3)))
    with pytest.raises(ValueError):
        Trajectory(t=np.array([0.0, -0.1, -0.2]), a=np.zeros((3, 3)))


def test_hamiltonian_only_generator_is_antisymmetric_rotation():
    e3 = 0.7
    lam, c = lindblad_to_bloch_generator(LindbladSpec(hamiltonian=e3 * SIGMA_Z))
    expected = np.array([[0.0, -2 * e3, 0.0], [2 * e3, 0.0, 0.0], [0.0, 0.0, 0.0]])
    np.testing.assert_allclose(lam, expected, atol=1e-14)
    np.testing.assert_array_equal(c, np.zeros(3))


def test_generic_hamiltonian_reproduces_cross_product():
    rng = np.random.default_rng(7)
    e = rng.normal(size=3)
    h = e[0] * SIGMA_X + e[1] * SIGMA_Y + e[2] * SIGMA_Z
    lam, c = lindblad_to_bloch_generator(LindbladSpec(hamiltonian=h))
    np.testing.assert_array_equal(c, np.zeros(3))
    for _ in range(10):
        a = rng.normal(size=3)
        np.testing.assert_allclose(lam @ a, 2.0 * np.cross(e, a), atol=1e-13)


def test_hermitian_jumps_are_unital():
    for op in (SIGMA_X, SIGMA_Y, SIGMA_Z, SIGMA_X + 0.3 * SIGMA_Z):
        spec = LindbladSpec(hamiltonian=np.zeros((2, 2)), jumps=((op, 0.7),))
        lam, c = lindblad_to_bloch_generator(spec)
        np.testing.assert_array_equal(c, np.zeros(3))


def test_pauli_jumps_give_diagonal_dissipation():
    g = (0.15, 0.05, 0.25)
    spec = LindbladSpec(
        hamiltonian=np.zeros((2, 2)),
        jumps=((SIGMA_X, g[0]), (SIGMA_Y, g[1]), (SIGMA_Z, g[2])),
    )
    lam, c = lindblad_to_bloch_generator(spec)
    np.testing.assert_array_equal(c, np.zeros(3))
    expected = -2.0 * np.diag([g[1] + g[2], g[0] + g[2], g[0] + g[1]])
    np.testing.assert_allclose(lam, expected, atol=1e-14)


def test_lowering_operator_drift_follows_convention():
    gamma = 0.8
    # [s-, s+] = -sigma_z convention: drift points to the -z pole
    s_minus = 0.5 * (SIGMA_X - 1j * SIGMA_Y)
    _, c = lindblad_to_bloch_generator(
        LindbladSpec(hamiltonian=np.zeros((2, 2)), jumps=((s_minus, gamma),))
    )
    np.testing.assert_allclose(c, [0.0, 0.0, -gamma / 2.0], atol=1e-15)
    # transposed convention flips the sign, same magnitude
    _, c2 = lindblad_to_bloch_generator(
        LindbladSpec(hamiltonian=np.zeros((2, 2)), jumps=((s_minus.conj().T, gamma),))
    )
    np.testing.assert_allclose(c2, [0.0, 0.0, gamma / 2.0], atol=1e-15)
    assert np.linalg.norm(c) == pytest.approx(gamma / 2.0, rel=1e-14)


def test_diagonal_spec_round_trips_against_model_integrator():
    e = np.array([0.9, -0.2, 0.35])
    g = np.array([0.15, 0.05, 0.25])
    h = e[0] * SIGMA_X + e[1] * SIGMA_Y + e[2] * SIGMA_Z
    spec = LindbladSpec(
        hamiltonian=h, jumps=((SIGMA_X, g[0]), (SIGMA_Y, g[1]), (SIGMA_Z, g[2]))
    )
    lam, c = lindblad_to_bloch_generator(spec)
    d_equiv = np.array([g[1] + g[2], g[0] + g[2], g[0] + g[1]])
    a0 = np.array([0.3, -0.5, 0.2])
    via_affine = integrate_affine(lam, c, a0, 1e-3, 1000)
    via_model = integrate(GkslModel(e=e, d=d_equiv), a0, 1e-3, 1000)
    np.testing.assert_allclose(via_affine.a, via_model.a, atol=1e-10)


def test_lindblad_spec_rejects_bad_input():
    with pytest.raises(ValueError):
        LindbladSpec(hamiltonian=np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        LindbladSpec(hamiltonian=np.zeros((2, 2)), jumps=((SIGMA_X, -0.1),))


def test_noise_zero_sigma_keeps_samples_and_drops_velocities(bench_model):
    traj = integrate(bench_model, BENCH_A0, 1e-3, 50)
    noisy = add_noise(traj, NoiseSpec(sigma=0.0, seed=1))
    np.testing.assert_array_equal(noisy.a, traj.a)
    assert noisy.v_exact is None


def test_noise_is_deterministic_per_seed_and_stream(bench_model):
    traj = integrate(bench_model, BENCH_A0, 1e-3, 50)
    spec = NoiseSpec(sigma=1e-2, seed=99)
    first = add_noise(traj, spec, stream=3)
    second = add_noise(traj, spec, stream=3)
    np.testing.assert_array_equal(first.a, second.a)
    other_stream = add_noise(traj, spec, stream=4)
    assert not np.array_equal(first.a, other_stream.a)
    other_seed = add_noise(traj, NoiseSpec(sigma=1e-2, seed=100), stream=3)
    assert not np.array_equal(first.a, other_seed.a)


def test_noise_standard_deviation(bench_model):
    traj = integrate(bench_model, np.array([0.4, 0.1, 0.2]), 1e-3, 9999)
    noisy = add_noise(traj, NoiseSpec(sigma=1e-2, seed=12345))
    resid_std = (noisy.a - traj.a).std(axis=0)
    np.testing.assert_allclose(resid_std, 1e-2, rtol=0.05)


def test_noise_projection_policy_counts_and_confines():
    a = np.tile([0.0, 0.0, 1.0 - 1e-7], (500, 1))
    traj = Trajectory(t=1e-3 * np.arange(500), a=a)
    noisy = add_noise(traj, NoiseSpec(sigma=1e-3, seed=8, boundary_policy="project"))
    assert noisy.meta["n_projected"] > 0
    norms = np.linalg.norm(noisy.a, axis=1)
    assert norms.max() <= PROJECTION_RADIUS + 1e-15
    projected = norms > 1.0 - 1e-6
    assert np.any(projected)


def test_noise_reject_policy_raises():
    a = np.tile([0.0, 0.0, 1.0 - 1e-7], (500, 1))
    traj = Trajectory(t=1e-3 * np.arange(500), a=a)
    with pytest.raises(BoundaryError):
        add_noise(traj, NoiseSpec(sigma=1e-3, seed=8, boundary_policy="reject"))


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(sigma=-1.0)
    with pytest.raises(ValueError):
        NoiseSpec(sigma=0.1, boundary_policy="clamp")


def test_model_params_round_trip():
    model = GkslModel(e=BENCH_E, d=BENCH_D, c=np.array([0.0, 0.1, 0.0]))
    np.testing.assert_array_equal(
        GkslModel.from_params(model.params("extended")).params("extended"),
        model.params("extended"),
    )
    assert not model.is_unital
    assert GkslModel(e=BENCH_E, d=BENCH_D).is_unital
