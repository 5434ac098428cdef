import math

import numpy as np
import pytest

from app.qubit import DriveParams
from app.sequence import (
    EnsembleLayout,
    GlobalPulse,
    LocalPiFlip,
    LocalShift,
    Measure,
    PulseSequence,
    SensitivitySchedule,
    SequenceOptions,
    Wait,
    accumulated_phase,
    build_cardinal_array,
    build_cardinal_states,
    build_dual_quadrature,
    build_kernel_schedule,
    build_local_dd,
    build_parity_addressing,
    build_phase_pattern,
    build_shift_fidelity,
    codec,
    effective_phase_fraction,
    validate,
    with_measurement,
)
from app.sequence.analysis import dark_clock, flip_schedule
from app.sequence.builders import kernel_flip_times, minimal_shift, phase_to_shift
from app.sequence.layout import signed_fraction
from app.utils.errors import InvalidArgumentError, SequenceAnalysisError

DRIVE = DriveParams()
WAVELENGTH = DRIVE.wavelength_nm
COMPOSITE = SequenceOptions(flip_mode="composite")


def _ops(seq):
    return [type(i).__name__ for i in seq.instructions]


def test_parity_addressing_structure():
    seq = build_parity_addressing(5, 349.2)
    assert _ops(seq) == ["GlobalPulse", "LocalShift", "Wait", "GlobalPulse", "Measure"]
    shift = seq.instructions[1]
    assert shift.shifts == {0: 0.0, 1: 349.2, 2: 0.0, 3: 349.2, 4: 0.0}
    assert shift.shift_time == 32.0
    assert seq.instructions[2].duration == 34.0
    assert seq.dark_time == pytest.approx(66.0)
    assert validate(seq) == []


def test_parity_addressing_keeps_full_distance():
    seq = build_parity_addressing(2, 2 * WAVELENGTH)
    assert seq.instructions[1].shifts[1] == pytest.approx(2 * WAVELENGTH)


def test_parity_addressing_needs_two_sites():
    with pytest.raises(InvalidArgumentError):
        build_parity_addressing(1, 100.0)


def test_pulse_durations_follow_rabi_frequency():
    seq = build_parity_addressing(2, 0.0)
    # pi/2 at 2.5 kHz is 100 us
    assert seq.instructions[0].duration == pytest.approx(100.0)
    assert seq.total_time == pytest.approx(100.0 + 32.0 + 34.0 + 100.0)


@pytest.mark.parametrize("dx, expected", [
    (0.0, 0.0),
    (WAVELENGTH / 2, WAVELENGTH / 2),
    (-WAVELENGTH / 2, WAVELENGTH / 2),
    (WAVELENGTH, 0.0),
    (0.75 * WAVELENGTH, -0.25 * WAVELENGTH),
])
def test_minimal_shift(dx, expected):
    assert minimal_shift(dx, WAVELENGTH) == pytest.approx(expected, abs=1e-9)


def test_phase_pattern_shifts_are_minimal():
    pattern = [0.0, 3 * math.pi, -5 * math.pi / 2, 7.0, math.pi / 4]
    seq = build_phase_pattern(pattern, 2000.0)
    shift = next(i for i in seq.instructions if isinstance(i, LocalShift))
    assert all(abs(dx) <= WAVELENGTH / 2 + 1e-9 for dx in shift.shifts.values())
    for site, phi in enumerate(pattern):
        residual = DRIVE.wavevector * shift.shifts[site] - phi
        assert math.remainder(residual, 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


def test_phase_pattern_midpoint_placement():
    seq = build_phase_pattern({0: 0.0, 1: math.pi}, 1000.0)
    assert _ops(seq) == ["GlobalPulse", "Wait", "LocalShift", "Wait", "Wait", "GlobalPulse", "Measure"]
    assert seq.instructions[1].duration == pytest.approx(seq.instructions[4].duration)
    assert seq.dark_time == pytest.approx(1000.0)


def test_phase_pattern_short_dark_time_uses_shift_window():
    seq = build_phase_pattern([0.0, 1.0], 10.0)
    assert seq.dark_time == pytest.approx(66.0)


def test_phase_pattern_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        build_phase_pattern([0.0, 1.0], -1.0)
    with pytest.raises(InvalidArgumentError):
        build_phase_pattern([0.0, float("nan")], 10.0)


def test_cardinal_state_programs():
    programs = build_cardinal_states()
    assert len(programs) == 6
    assert programs[0].instructions == []
    assert _ops(programs[1]) == ["GlobalPulse", "GlobalPulse"]
    assert _ops(programs[3]) == ["GlobalPulse"]


def test_cardinal_array_has_no_measurement():
    seq = build_cardinal_array()
    assert seq.array_size == 6
    assert seq.measurement == {}
    measured = with_measurement(seq, "Y")
    assert measured.measurement == {i: "Y" for i in range(6)}
    assert with_measurement(measured, "X").measurement == {i: "X" for i in range(6)}
    assert sum(isinstance(i, Measure) for i in with_measurement(measured, "X").instructions) == 1


def test_shift_fidelity_overrides_shift_time():
    seq = build_shift_fidelity(WAVELENGTH, shift_time=50.0, n_sites=4)
    assert seq.instructions[1].shift_time == 50.0
    assert seq.instructions[1].shifts[1] == pytest.approx(WAVELENGTH)


def test_dual_quadrature_quarter_wave_on_y_sites():
    layout = EnsembleLayout.alternating(4)
    seq = build_dual_quadrature(layout, 1000.0)
    shift = next(i for i in seq.instructions if isinstance(i, LocalShift))
    assert shift.shifts[0] == 0.0 and shift.shifts[2] == 0.0
    assert shift.shifts[1] == pytest.approx(-WAVELENGTH / 4)
    assert seq.dark_time == pytest.approx(1000.0)


def test_dual_quadrature_needs_single_ensemble():
    with pytest.raises(InvalidArgumentError):
        build_dual_quadrature(EnsembleLayout.blocks(2), 1000.0)


@pytest.mark.parametrize("options", [None, COMPOSITE])
def test_local_dd_fractions(options):
    layout = EnsembleLayout.blocks(3, 2)
    seq = build_local_dd(layout, 8000.0, options)
    fractions = [effective_phase_fraction(seq, layout.ensemble_sites(m)[0]) for m in range(3)]
    assert fractions == pytest.approx([1.0, 0.5, 0.25], abs=1e-12)
    assert validate(seq) == []


def test_local_dd_flip_times():
    layout = EnsembleLayout.blocks(3)
    seq = build_local_dd(layout, 8000.0)
    assert flip_schedule(seq, layout.ensemble_sites(1)[0]) == ([2000.0], 8000.0)
    assert flip_schedule(seq, layout.ensemble_sites(2)[0]) == ([3000.0], 8000.0)
    assert flip_schedule(seq, 0) == ([], 8000.0)


def test_local_dd_needs_three_ensembles():
    with pytest.raises(InvalidArgumentError):
        build_local_dd(EnsembleLayout.blocks(2), 8000.0)


def test_composite_flips_that_overlap_are_rejected():
    with pytest.raises(InvalidArgumentError):
        build_local_dd(EnsembleLayout.blocks(3), 400.0, COMPOSITE)


def test_composite_flip_occupies_two_windows():
    layout = EnsembleLayout.blocks(3)
    seq = build_local_dd(layout, 8000.0, COMPOSITE)
    flips = [i for i in seq.instructions if isinstance(i, LocalPiFlip)]
    assert [f.dark_duration for f in flips] == [132.0, 132.0]
    assert seq.dark_time == pytest.approx(8000.0)


def test_kernel_single_reduces_to_local_dd_times():
    flips = kernel_flip_times(3, 1, 8000.0)
    assert flips == {1: [2000.0], 2: [3000.0]}


@pytest.mark.parametrize("M, k", [(2, 1), (3, 2), (3, 3), (4, 4), (5, 2)])
def test_kernel_schedule_fractions(M, k):
    layout = EnsembleLayout.blocks(M)
    seq, schedule = build_kernel_schedule(M, k, 6000.0, layout)
    for m in range(M):
        assert schedule.fraction(m) == pytest.approx(2.0 ** -m, abs=1e-12)
        assert effective_phase_fraction(seq, layout.ensemble_sites(m)[0]) == pytest.approx(2.0 ** -m, abs=1e-12)
    assert schedule.total_time == pytest.approx(k * 6000.0)


def test_kernel_schedule_rejects_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        build_kernel_schedule(1, 2, 1000.0)
    with pytest.raises(InvalidArgumentError):
        build_kernel_schedule(3, 2, 1000.0, EnsembleLayout.blocks(2))


@pytest.mark.parametrize("flips, fraction", [([0.25], 0.5), ([0.375], 0.25), ([], 1.0), ([0.25, 0.75], 0.0)])
def test_signed_fraction(flips, fraction):
    assert signed_fraction(flips) == pytest.approx(fraction)


def test_schedule_validation():
    SensitivitySchedule(M=2, k=1, tau=1.0, flip_times={1: (0.25,)})
    with pytest.raises(InvalidArgumentError):
        SensitivitySchedule(M=2, k=1, tau=1.0, flip_times={1: (0.3,)})
    with pytest.raises(InvalidArgumentError):
        SensitivitySchedule(M=2, k=1, tau=1.0, flip_times={1: (1.0,)})


def test_accumulated_phase_for_linear_drift():
    layout = EnsembleLayout.blocks(3)
    seq = build_local_dd(layout, 8000.0)
    drift = lambda t: 0.002 * np.asarray(t)
    for m in range(3):
        assert accumulated_phase(seq, layout.ensemble_sites(m)[0], drift) == pytest.approx(16.0 * 2.0 ** -m)


def test_accumulated_phase_cancels_static_offset_when_balanced():
    seq = PulseSequence(array_size=1, instructions=[
        GlobalPulse(angle=math.pi / 2),
        Wait(duration=100.0),
        LocalPiFlip(sites=(0,)),
        Wait(duration=100.0),
        GlobalPulse(angle=math.pi / 2),
    ])
    assert effective_phase_fraction(seq, 0) == pytest.approx(0.0)
    assert accumulated_phase(seq, 0, lambda t: 0.01 * np.asarray(t)) == pytest.approx(0.0)


def test_analysis_needs_ramsey_skeleton():
    seq = PulseSequence(array_size=1, instructions=[GlobalPulse(angle=math.pi), Wait(duration=10.0)])
    with pytest.raises(SequenceAnalysisError):
        effective_phase_fraction(seq, 0)


def test_analysis_needs_dark_time():
    seq = PulseSequence(array_size=1, instructions=[GlobalPulse(angle=math.pi / 2), GlobalPulse(angle=math.pi / 2)])
    with pytest.raises(SequenceAnalysisError):
        effective_phase_fraction(seq, 0)


def test_dark_clock_ignores_pulses():
    seq = build_parity_addressing(2, 10.0)
    assert dark_clock(seq) == [0.0, 0.0, 32.0, 66.0, 66.0]


def test_validate_reports_every_problem():
    seq = PulseSequence(array_size=2, instructions=[
        GlobalPulse(angle=math.pi / 2),
        LocalShift(shifts={0: 10.0, 5: 10.0}, shift_time=10.0),
        Measure(bases={0: "Z", 3: "Z"}),
        GlobalPulse(angle=math.pi / 2),
    ])
    kinds = sorted(v.kind for v in validate(seq))
    assert kinds == ["measure-order", "shift-time", "site-bounds", "site-bounds"]
    assert validate(seq, min_shift_time=5.0) != []
    assert "shift-time" not in {v.kind for v in validate(seq, min_shift_time=5.0)}


def test_short_shift_time_flagged():
    seq = build_shift_fidelity(WAVELENGTH, shift_time=10.0)
    assert [v.kind for v in validate(seq)] == ["shift-time"]


def test_layouts():
    layout = EnsembleLayout.alternating(6)
    assert layout.sites(0, "X") == [0, 2, 4]
    assert layout.sites(0, "Y") == [1, 3, 5]
    blocks = EnsembleLayout.blocks(3, 2)
    assert blocks.M == 3 and blocks.n_sites == 12
    assert blocks.ensemble_sites(1) == [4, 5, 6, 7]
    assert blocks.atoms_per_quadrature(2) == (2, 2)


def test_unbalanced_layout_is_allowed():
    layout = EnsembleLayout(ensemble=(0, 0, 0), quadrature=("X", "Y", "X"))
    assert not layout.is_balanced(0)


@pytest.mark.parametrize("ensemble, quadrature", [
    ((0, 0), ("X",)),
    ((), ()),
    ((0, 0), ("X", "Z")),
    ((0, 1), ("X", "Y")),
])
def test_invalid_layouts(ensemble, quadrature):
    with pytest.raises(InvalidArgumentError):
        EnsembleLayout(ensemble=ensemble, quadrature=quadrature)


def test_unknown_instruction_fields_rejected():
    with pytest.raises(ValueError):
        PulseSequence.model_validate({"array_size": 1, "instructions": [{"op": "WAIT", "duration": 1.0, "x": 1}]})
    with pytest.raises(ValueError):
        Wait(duration=-1.0)


def test_codec_round_trip():
    layout = EnsembleLayout.blocks(3)
    seq = build_local_dd(layout, 8000.0, COMPOSITE)
    assert codec.loads(codec.dumps(seq)) == seq


def test_codec_reads_comments():
    text = "# two sites\nARRAY 2\nGLOBAL_PULSE 100.0 angle=1.5707963267948966 phase=0.0\nWAIT 50.0  # dark\n"
    seq = codec.loads(text)
    assert seq.array_size == 2
    assert _ops(seq) == ["GlobalPulse", "Wait"]


@pytest.mark.parametrize("text, line", [
    ("ARRAY 2\nWAIT abc\n", 2),
    ("ARRAY 2\nJUMP 1.0\n", 2),
    ("ARRAY 1\n\nGLOBAL_PULSE 1.0 angle=1.0\n", 3),
    ("ARRAY 1\nMEASURE 0.0 0=Q\n", 2),
])
def test_codec_errors_name_the_line(text, line):
    with pytest.raises(InvalidArgumentError, match=f"line {line}"):
        codec.loads(text)


def test_codec_needs_header():
    with pytest.raises(InvalidArgumentError):
        codec.loads("WAIT 1.0\n")


def test_phase_to_shift_rejects_nan():
    with pytest.raises(InvalidArgumentError):
        phase_to_shift(float("nan"), DRIVE)
