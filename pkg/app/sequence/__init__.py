from app.sequence.instructions import (
    GlobalPulse,
    LocalShift,
    Wait,
    LocalPiFlip,
    Measure,
    PulseSequence,
)
from app.sequence.layout import EnsembleLayout, SensitivitySchedule
from app.sequence.builders import (
    SequenceOptions,
    CARDINAL_ORDER,
    build_parity_addressing,
    build_phase_pattern,
    build_cardinal_states,
    build_cardinal_array,
    build_shift_fidelity,
    build_dual_quadrature,
    build_local_dd,
    build_kernel_schedule,
    with_measurement,
)
from app.sequence.analysis import Violation, effective_phase_fraction, accumulated_phase, validate
from app.sequence import codec
