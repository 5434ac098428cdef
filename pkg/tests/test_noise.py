import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.config import defaults
from app.noise import (
    GateErrorParams,
    LaserNoiseParams,
    SpamParams,
    apply_spam,
    qpn_sigma_oracle,
    sample_trajectory,
)
from app.utils.errors import InvalidArgumentError
from app.utils.rng import derive_rng

GRID = np.linspace(0.0, 10.0, 21)


def test_zero_beta_is_silent():
    trajectory = sample_trajectory(LaserNoiseParams(kind="power-law-sigma", beta=0.0), GRID, seed=1, n_paths=5)
    assert np.all(trajectory.phases == 0.0)


def test_trajectory_starts_at_zero():
    trajectory = sample_trajectory(LaserNoiseParams(kind="random-walk-phase", beta=0.4), GRID, seed=2, n_paths=50)
    assert np.all(trajectory.phases[:, 0] == 0.0)


def test_trajectory_deterministic():
    params = LaserNoiseParams(kind="power-law-sigma", beta=0.3, alpha=0.59)
    a = sample_trajectory(params, GRID, seed=3, n_paths=10)
    b = sample_trajectory(params, GRID, seed=3, n_paths=10)
    assert np.array_equal(a.phases, b.phases)


def test_shot_to_shot_frequency_scaling():
    params = LaserNoiseParams(kind="shot-to-shot-frequency", beta=0.2)
    trajectory = sample_trajectory(params, GRID, seed=4, n_paths=100_000)
    assert np.std(trajectory.phases[:, -1]) == pytest.approx(0.2 * 10.0, rel=0.03)


def test_power_law_spread_matches_published_fit():
    params = LaserNoiseParams(kind="power-law-sigma", beta=defaults.PAPER_BETA, alpha=defaults.PAPER_ALPHA)
    trajectory = sample_trajectory(params, GRID, seed=5, n_paths=100_000)
    spread = np.std(trajectory.phases[:, 1:], axis=0)
    assert np.allclose(spread, params.sigma(GRID[1:]), rtol=0.03)


def test_power_law_spread_monotone():
    params = LaserNoiseParams(kind="power-law-sigma", beta=0.3, alpha=0.59)
    trajectory = sample_trajectory(params, GRID, seed=6, n_paths=100_000)
    spread = np.std(trajectory.phases, axis=0)
    stderr = spread / math.sqrt(2 * 100_000)
    assert np.all(np.diff(spread) >= -2 * stderr[1:])


def test_ou_spread_matches_model():
    params = LaserNoiseParams(kind="ou-frequency", beta=0.5, correlation_time=1.0)
    trajectory = sample_trajectory(params, GRID, seed=7, n_paths=20_000)
    assert np.std(trajectory.phases[:, -1]) == pytest.approx(float(params.sigma(10.0)), rel=0.05)


def test_ou_needs_correlation_time():
    with pytest.raises(ValidationError):
        LaserNoiseParams(kind="ou-frequency", beta=0.5)


def test_detuning_adds_linear_phase():
    trajectory = sample_trajectory(LaserNoiseParams(kind="none", detuning=1.5), GRID, seed=0, n_paths=2)
    assert np.allclose(trajectory.phases, 1.5 * GRID[None, :])


def test_trajectory_interpolation():
    trajectory = sample_trajectory(LaserNoiseParams(kind="none", detuning=2.0), GRID, seed=0)
    assert trajectory.at([0.25, 7.75]) == pytest.approx(np.array([[0.5, 15.5]]))


@pytest.mark.parametrize("grid", [[0.0, 2.0, 1.0], [1.0, 2.0], []])
def test_bad_grid_rejected(grid):
    with pytest.raises(InvalidArgumentError):
        sample_trajectory(LaserNoiseParams(beta=0.1), grid, seed=0)


def test_noise_param_bounds():
    with pytest.raises(ValidationError):
        LaserNoiseParams(beta=-0.1)
    with pytest.raises(ValidationError):
        LaserNoiseParams(alpha=2.0)
    with pytest.raises(ValidationError):
        LaserNoiseParams(extra_field=1)


def test_perfect_spam_reads_truth():
    rng = derive_rng(1, "spam")
    assert apply_spam(1.0, SpamParams.perfect(), rng)
    assert not apply_spam(0.0, SpamParams.perfect(), rng)


def test_spam_on_excited_atoms():
    spam = SpamParams()
    read = spam.sample(np.ones(1_000_000, dtype=bool), derive_rng(2, "spam"))
    assert read.mean() == pytest.approx(0.9992, abs=0.0002)


def test_spam_on_ground_atoms():
    spam = SpamParams()
    read = spam.sample(np.zeros(1_000_000, dtype=bool), derive_rng(3, "spam"))
    assert read.mean() == pytest.approx(0.0033, abs=0.0002)


def test_spam_bounds_and_correction():
    spam = SpamParams()
    low, high = spam.measured_fraction(0.0), spam.measured_fraction(1.0)
    assert low == pytest.approx(spam.survival * (1 - spam.eject) * spam.detect)
    assert high == pytest.approx(spam.survival * spam.detect)
    for p in (0.0, 0.3, 1.0):
        for rotated in (False, True):
            measured = spam.measured_fraction(p, rotated_basis=rotated)
            assert spam.correct(measured, rotated_basis=rotated) == pytest.approx(p, abs=1e-12)


def test_readout_matrix_is_column_stochastic():
    assert np.allclose(SpamParams().readout_matrix().sum(axis=0), 1.0)


def test_apply_spam_rejects_bad_probability():
    with pytest.raises(InvalidArgumentError):
        apply_spam(1.5, SpamParams(), 0)


def test_gate_error_scales_with_angle():
    errors = GateErrorParams.thermal()
    assert errors.probability(math.pi) == pytest.approx(2 * defaults.TEMPERATURE_PI_INFIDELITY)
    assert errors.probability(math.pi / 2) == pytest.approx(defaults.TEMPERATURE_PI_INFIDELITY)


def test_gate_error_off_leaves_state():
    amp0, amp1 = np.ones((4, 3), dtype=complex), np.zeros((4, 3), dtype=complex)
    out0, out1 = GateErrorParams().apply(amp0, amp1, math.pi, derive_rng(0))
    assert out0 is amp0 and out1 is amp1


def test_reference_budget_matches_quoted_fidelities():
    errors = GateErrorParams.reference()
    assert 1 - errors.probability(math.pi) / 2 == pytest.approx(defaults.GLOBAL_PI_FIDELITY)
    assert 1 - errors.depolarizing_shift / 2 == pytest.approx(defaults.SHIFT_FIDELITY)
    assert errors.depolarizing_pi > GateErrorParams.thermal().depolarizing_pi


def test_shift_error_respects_the_move_mask():
    amp0, amp1 = np.ones((4000, 2), dtype=complex), np.zeros((4000, 2), dtype=complex)
    moved = np.array([[False, True]])
    out0, out1 = GateErrorParams(depolarizing_shift=1.0).apply_shift(amp0, amp1, moved, derive_rng(1))
    assert np.array_equal(out0[:, 0], amp0[:, 0]) and not out1[:, 0].any()
    # Full depolarizing: X or Y with probability 1/2 each shot
    assert np.mean(np.abs(out1[:, 1]) ** 2) == pytest.approx(0.5, abs=0.03)


def test_qpn_scales_inverse_sqrt_n():
    ratio = qpn_sigma_oracle(160, 1.0, 40_000, 1) / qpn_sigma_oracle(40, 1.0, 40_000, 1)
    assert ratio == pytest.approx(0.5, rel=0.05)


def test_qpn_vanishes_for_large_n():
    assert qpn_sigma_oracle(100_000, 1.0, 10_000, 2) < 0.01


def test_qpn_rejects_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        qpn_sigma_oracle(0, 1.0, 10_000, 0)
    with pytest.raises(InvalidArgumentError):
        qpn_sigma_oracle(10, 1.5, 10_000, 0)
    with pytest.raises(InvalidArgumentError):
        qpn_sigma_oracle(10, 1.0, 100, 0)
