import math

import numpy as np
import pytest

from app.noise import GateErrorParams, LaserNoiseParams, SpamParams
from app.qubit import DriveParams, cardinal_state, state_fidelity
from app.sequence import (
    CARDINAL_ORDER,
    EnsembleLayout,
    SequenceOptions,
    accumulated_phase,
    build_cardinal_array,
    build_dual_quadrature,
    build_local_dd,
    build_parity_addressing,
    build_phase_pattern,
    with_measurement,
)
from app.simulation import SequenceSimulator
from app.utils.errors import InvalidArgumentError

DRIVE = DriveParams()
SIM = SequenceSimulator(DRIVE)


def test_half_wavelength_parity():
    outcomes = SIM.run(build_parity_addressing(6, DRIVE.wavelength_nm / 2), 200, seed=1)
    assert np.all(outcomes.outcomes[:, 1::2] == False)  # noqa: E712
    assert np.all(outcomes.outcomes[:, 0::2] == True)  # noqa: E712


@pytest.mark.parametrize("dx", [0.0, 100.0, 349.2, 612.0, 1000.0])
def test_parity_population_follows_move(dx):
    outcomes = SIM.run(build_parity_addressing(4, dx), 10, seed=2)
    expected = (1.0 + math.cos(DRIVE.wavevector * dx)) / 2.0
    assert outcomes.ideal_population()[1::2] == pytest.approx([expected] * 2, abs=1e-12)
    assert outcomes.ideal_population()[0::2] == pytest.approx([1.0, 1.0], abs=1e-12)


def test_static_sites_bitwise_independent_of_neighbour_moves():
    noise = LaserNoiseParams(kind="power-law-sigma", beta=0.4, alpha=0.59)
    spam = SpamParams()
    runs = [
        SIM.run(build_parity_addressing(8, dx), 300, seed=3, noise=noise, spam=spam).outcomes[:, 0::2]
        for dx in (0.0, 50.0, 349.2, 1200.0)
    ]
    for other in runs[1:]:
        assert np.array_equal(runs[0], other)


def test_runs_are_deterministic():
    noise = LaserNoiseParams(kind="random-walk-phase", beta=0.5)
    seq = build_parity_addressing(4, 200.0)
    a = SIM.run(seq, 100, seed=4, noise=noise, spam=SpamParams())
    b = SIM.run(seq, 100, seed=4, noise=noise, spam=SpamParams())
    assert np.array_equal(a.outcomes, b.outcomes)
    assert np.array_equal(a.p_excited, b.p_excited)


def test_dual_quadrature_reads_cos_and_sin():
    layout = EnsembleLayout.alternating(4)
    detuning = 1.3
    for T in (0.5, 1.7, 4.0):
        seq = build_dual_quadrature(layout, T * 1000.0)
        outcomes = SIM.run(seq, 5, seed=5, noise=LaserNoiseParams(kind="none", detuning=detuning))
        theta = detuning * T
        p = outcomes.ideal_population()
        assert p[0] == pytest.approx((1 + math.cos(theta)) / 2, abs=1e-12)
        assert p[1] == pytest.approx((1 + math.sin(theta)) / 2, abs=1e-12)


def test_phase_pattern_fringes():
    pattern = [0.0, math.pi, math.pi / 3, -math.pi / 2]
    detuning = 0.8
    for T in (0.3, 1.0, 2.5):
        seq = build_phase_pattern(pattern, T * 1000.0)
        outcomes = SIM.run(seq, 5, seed=6, noise=LaserNoiseParams(kind="none", detuning=detuning))
        theta = detuning * seq.dark_time / 1000.0
        expected = [(1 + math.cos(theta + phi)) / 2 for phi in pattern]
        assert outcomes.ideal_population() == pytest.approx(expected, abs=1e-9)


def test_antiphase_pattern():
    pattern = [0.0, math.pi] * 3
    seq = build_phase_pattern(pattern, 1500.0)
    p = SIM.run(seq, 5, seed=7, noise=LaserNoiseParams(kind="none", detuning=0.9)).ideal_population()
    assert p[1::2] == pytest.approx(1.0 - p[0::2], abs=1e-12)


def test_cardinal_array_prepares_all_six_states():
    outcomes = SIM.run(build_cardinal_array(), 3, seed=8)
    for site, label in enumerate(CARDINAL_ORDER):
        assert state_fidelity(outcomes.density_matrix(site), cardinal_state(label)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("basis", ["X", "Y", "Z"])
def test_cardinal_readout_bases(basis):
    outcomes = SIM.run(with_measurement(build_cardinal_array(), basis), 3, seed=9)
    for site, label in enumerate(CARDINAL_ORDER):
        if label[1] == basis:
            expected = 1.0 if label[0] == "+" else 0.0
        else:
            expected = 0.5
        assert outcomes.ideal_population()[site] == pytest.approx(expected, abs=1e-12)
    assert outcomes.bases == [basis] * 6


def test_local_dd_rates_under_detuning():
    layout = EnsembleLayout.blocks(3)
    detuning, T = 1.2, 2.0
    outcomes = SIM.run(build_local_dd(layout, T * 1000.0), 5, seed=10,
                       noise=LaserNoiseParams(kind="none", detuning=detuning))
    p = outcomes.ideal_population()
    for m in range(3):
        theta_m = detuning * T * 2.0 ** -m
        x, y = layout.sites(m, "X")[0], layout.sites(m, "Y")[0]
        assert p[x] == pytest.approx((1 + math.cos(theta_m)) / 2, abs=1e-12)
        assert p[y] == pytest.approx((1 + math.sin(theta_m)) / 2, abs=1e-12)


def test_composite_flips_match_ideal_without_noise():
    layout = EnsembleLayout.blocks(3)
    ideal = SIM.run(build_local_dd(layout, 4000.0), 3, seed=11)
    composite = SIM.run(build_local_dd(layout, 4000.0, SequenceOptions(flip_mode="composite")), 3, seed=11)
    assert composite.ideal_population() == pytest.approx(ideal.ideal_population(), abs=1e-12)


@pytest.mark.parametrize("flip_mode", ["ideal", "composite"])
def test_flips_follow_the_flip_schedule_under_detuning(flip_mode):
    layout = EnsembleLayout.blocks(3)
    detuning = 1.2
    seq = build_local_dd(layout, 2000.0, SequenceOptions(flip_mode=flip_mode))
    outcomes = SIM.run(seq, 4, seed=17, noise=LaserNoiseParams(kind="none", detuning=detuning))
    p = outcomes.ideal_population()

    def laser(t_us):
        return detuning * np.asarray(t_us) / 1000.0

    for m in range(3):
        x, y = layout.sites(m, "X")[0], layout.sites(m, "Y")[0]
        theta = accumulated_phase(seq, x, laser)
        assert theta == pytest.approx(detuning * 2.0 * 2.0 ** -m, abs=1e-9)
        assert p[x] == pytest.approx((1 + math.cos(theta)) / 2, abs=1e-9)
        assert p[y] == pytest.approx((1 + math.sin(theta)) / 2, abs=1e-9)


def test_run_with_phases_uses_supplied_trajectory():
    layout = EnsembleLayout.alternating(2)
    seq = build_dual_quadrature(layout, 2000.0)
    # 0.7 rad/ms on the microsecond dark clock
    outcomes = SIM.run_with_phases(seq, lambda t: 0.7e-3 * np.asarray(t), 4, seed=12)
    p = outcomes.ideal_population()
    assert p[0] == pytest.approx((1 + math.cos(1.4)) / 2, abs=1e-12)
    assert p[1] == pytest.approx((1 + math.sin(1.4)) / 2, abs=1e-12)


def test_laser_noise_spreads_the_phase():
    layout = EnsembleLayout.alternating(2)
    seq = build_dual_quadrature(layout, 1000.0)
    noise = LaserNoiseParams(kind="power-law-sigma", beta=0.3, alpha=0.59)
    outcomes = SIM.run(seq, 20_000, seed=13, noise=noise)
    z_x = 2 * outcomes.p_excited[:, 0] - 1
    z_y = 2 * outcomes.p_excited[:, 1] - 1
    assert np.std(np.arctan2(z_y, z_x)) == pytest.approx(0.3, rel=0.03)


def test_spam_lowers_bright_population():
    outcomes = SIM.run(build_parity_addressing(2, 0.0), 50_000, seed=14, spam=SpamParams())
    spam = SpamParams()
    assert outcomes.population().mean() == pytest.approx(spam.survival * spam.detect, abs=0.001)


def test_readout_pulse_fidelity_only_hits_rotated_bases():
    spam = SpamParams(survival=1.0, detect=1.0, eject=1.0, readout_pulse_fidelity=0.9)
    seq = with_measurement(build_cardinal_array(), "X")
    outcomes = SIM.run(seq, 20_000, seed=15, spam=spam)
    plus_x = CARDINAL_ORDER.index("+X")
    assert outcomes.population()[plus_x] == pytest.approx(0.9, abs=0.01)

    z_outcomes = SIM.run(with_measurement(build_cardinal_array(), "Z"), 2000, seed=15, spam=spam)
    assert z_outcomes.population()[CARDINAL_ORDER.index("+Z")] == 1.0


def test_gate_errors_reduce_contrast():
    clean = SIM.run(build_parity_addressing(2, 0.0), 5000, seed=16)
    noisy = SIM.run(build_parity_addressing(2, 0.0), 5000, seed=16, errors=GateErrorParams(depolarizing_pi=0.4))
    assert clean.population().mean() == 1.0
    assert noisy.population().mean() < 0.95


def test_shift_errors_only_hit_moved_sites():
    errors = GateErrorParams(depolarizing_shift=0.3)
    static, moved = [0, 2, 4], [1, 3, 5]
    runs = [
        SIM.run(build_parity_addressing(6, dx), 4000, seed=18, errors=errors)
        for dx in (DRIVE.wavelength_nm, 2 * DRIVE.wavelength_nm)
    ]
    assert np.array_equal(runs[0].outcomes[:, static], runs[1].outcomes[:, static])
    assert runs[0].population()[static].mean() == 1.0
    assert runs[0].population()[moved].mean() == pytest.approx(0.85, abs=0.02)


def test_outcome_helpers():
    layout = EnsembleLayout.alternating(6)
    outcomes = SIM.run(build_dual_quadrature(layout, 1000.0), 40, seed=17)
    assert outcomes.n_shots == 40 and outcomes.n_sites == 6
    assert np.all(outcomes.fraction(layout.sites(0, "X")) == 1.0)
    assert np.all(outcomes.counts(layout.sites(0, "X")) == 3)
    rho = outcomes.density_matrix(1)
    assert np.trace(rho).real == pytest.approx(1.0)


def test_shot_count_checked():
    with pytest.raises(InvalidArgumentError):
        SIM.run(build_parity_addressing(2, 0.0), 0, seed=0)
