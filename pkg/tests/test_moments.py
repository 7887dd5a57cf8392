import io

import numpy as np
import pytest
from scipy.linalg import solve_continuous_lyapunov

from darkmodes import (
    DimensionError,
    InvalidInputError,
    NoSteadyStateError,
    NoiseModel,
    build_system,
    decompose,
    simulate,
    steady_state_covariance,
    transform,
)
from darkmodes.scenarios import optomechanical, oscillator

from _systems import random_symmetric


def _damped(kappa=1.0):
    return oscillator(np.zeros((2, 2)), kappa)


def _exact_damped(t, V0, x0, kappa):
    """Closed form for A = -kappa/2 I, B B^T = kappa I, N = I/2."""
    V = 0.5 * np.eye(2) + (V0 - 0.5 * np.eye(2)) * np.exp(-kappa * t)
    return np.exp(-kappa * t / 2) * x0, V


@pytest.mark.parametrize("kappa", [1.0, 3.0])
def test_damped_oscillator_relaxes_to_vacuum(kappa):
    traj = simulate(_damped(kappa), np.ones(2), np.eye(2), NoiseModel.vacuum(1), 10 / kappa, 1e-3 / kappa)
    assert np.abs(traj.covariances[-1] - 0.5 * np.eye(2)).max() <= 1e-4
    x, V = _exact_damped(traj.times[-1], np.eye(2), np.ones(2), kappa)
    np.testing.assert_allclose(traj.covariances[-1], V, atol=1e-12)
    np.testing.assert_allclose(traj.means[-1], x, atol=1e-12)


def test_rk4_is_fourth_order():
    V0 = np.array([[2.0, 0.3], [0.3, 1.0]])
    _, exact = _exact_damped(2.0, V0, np.ones(2), 1.0)
    errors = []
    for dt in (0.2, 0.1):
        traj = simulate(_damped(), np.ones(2), V0, NoiseModel.vacuum(1), 2.0, dt)
        errors.append(np.abs(traj.covariances[-1] - exact).max())
    assert 13 < errors[0] / errors[1] < 19


def test_closed_free_system_is_frozen(rng):
    sys = build_system(np.zeros((4, 4)))
    V0 = random_symmetric(rng, 4)
    x0 = rng.normal(size=4)
    traj = simulate(sys, x0, V0, NoiseModel(np.zeros((0, 0))), 1.0, 0.1)
    assert np.all(traj.means == x0)
    assert np.all(traj.covariances == (V0 + V0.T) / 2)


def test_last_step_lands_on_end_time():
    traj = simulate(_damped(), np.zeros(2), np.eye(2), NoiseModel.vacuum(1), 0.25, 0.1)
    np.testing.assert_allclose(traj.times, [0, 0.1, 0.2, 0.25])


def test_covariance_stays_symmetric(rng):
    sys = build_system(random_symmetric(rng, 4), [rng.normal(size=4) + 1j * rng.normal(size=4)])
    traj = simulate(sys, np.zeros(4), np.eye(4), NoiseModel.vacuum(1), 2.0, 1e-2)
    assert max(np.abs(V - V.T).max() for V in traj.covariances) == 0


def test_vacuum_state_respects_uncertainty():
    traj = simulate(optomechanical(), np.zeros(6), 0.5 * np.eye(6), NoiseModel.vacuum(1), 2.0, 1e-2)
    assert traj.uncertainty_violation() >= -1e-12


def test_unstable_run_is_aborted():
    G = np.diag([1.0, -1.0])  # inverted oscillator
    traj = simulate(build_system(G), np.ones(2), np.eye(2), NoiseModel(np.zeros((0, 0))), 100.0, 1e-2)
    assert traj.aborted
    assert traj.times[-1] < 100.0 and len(traj.times) == len(traj.covariances)


def test_simulate_validates_inputs():
    with pytest.raises(InvalidInputError):
        simulate(_damped(), np.zeros(2), np.eye(2), NoiseModel.vacuum(1), 1.0, 0.0)
    with pytest.raises(DimensionError):
        simulate(_damped(), np.zeros(3), np.eye(2), NoiseModel.vacuum(1), 1.0, 0.1)
    with pytest.raises(DimensionError):
        simulate(_damped(), np.zeros(2), np.eye(2), NoiseModel.vacuum(2), 1.0, 0.1)
    with pytest.raises(InvalidInputError):
        NoiseModel(-np.eye(2))


def test_transformed_dark_block_ignores_noise():
    sys = optomechanical()
    t_sys = transform(sys, decompose(sys).T)
    runs = [simulate(t_sys, np.ones(6), 0.5 * np.eye(6), NoiseModel.vacuum(1, s), 5.0, 1e-2) for s in (1, 10)]
    assert np.abs(runs[0].means[:, :2] - runs[1].means[:, :2]).max() <= 1e-12
    assert np.abs(runs[0].covariances[:, :2, :2] - runs[1].covariances[:, :2, :2]).max() <= 1e-12
    assert np.abs(runs[0].covariances[:, 2:, 2:] - runs[1].covariances[:, 2:, 2:]).max() > 1e-2


def test_csv_layout():
    traj = simulate(_damped(), np.ones(2), np.eye(2), NoiseModel.vacuum(1), 0.2, 0.1)
    assert traj.csv_header() == ["t", "mean_1", "mean_2", "v_11", "v_12", "v_22"]
    buf = io.StringIO()
    traj.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 4
    assert lines[1] == "0,1,1,1,0,1"


def test_steady_state_of_damped_oscillator():
    np.testing.assert_allclose(steady_state_covariance(_damped(2.0), NoiseModel.vacuum(1)), 0.5 * np.eye(2), atol=1e-14)


def test_steady_state_matches_scipy(rng):
    checked = 0
    while checked < 5:
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        sys = build_system(random_symmetric(rng, 2 * n), [rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n) for _ in range(m)])
        if np.linalg.eigvals(sys.A).real.max() > -1e-3:
            continue
        noise = NoiseModel.thermal(m, float(rng.uniform(0, 2)))
        expected = solve_continuous_lyapunov(sys.A, -sys.B @ noise.intensity @ sys.B.T)
        np.testing.assert_allclose(steady_state_covariance(sys, noise), expected, atol=1e-10)
        checked += 1


def test_steady_state_without_noise_input():
    sys = _damped()
    zero_noise = NoiseModel(np.zeros((2, 2)))
    np.testing.assert_array_equal(steady_state_covariance(sys, zero_noise), np.zeros((2, 2)))


def test_dark_modes_have_no_steady_state():
    with pytest.raises(NoSteadyStateError):
        steady_state_covariance(optomechanical(), NoiseModel.vacuum(1))
