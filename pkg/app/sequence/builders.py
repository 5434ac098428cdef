import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.config.settings import settings
from app.qubit.state import DriveParams
from app.sequence.instructions import (
    Basis,
    FlipMode,
    GlobalPulse,
    LocalPiFlip,
    LocalShift,
    Measure,
    PulseSequence,
    Wait,
)
from app.sequence.layout import EnsembleLayout, SensitivitySchedule
from app.utils.errors import InvalidArgumentError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

# Labels in the order the tomography report lists them
CARDINAL_ORDER: Tuple[str, ...] = ("-Z", "+Z", "-Y", "+Y", "-X", "+X")

# (phi_1, phi_2) applied after the first and second X(pi/2) on the parallel array
CARDINAL_PHASES: Dict[str, Tuple[float, float]] = {
    "-Z": (math.pi, 0.0),
    "+Z": (0.0, 0.0),
    "-Y": (-math.pi / 2, -math.pi / 2),
    "+Y": (-math.pi / 2, math.pi / 2),
    "-X": (math.pi / 2, 0.0),
    "+X": (-math.pi / 2, 0.0),
}


class SequenceOptions(BaseModel):
    """Timing and realization knobs shared by every compiler."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    drive: DriveParams = Field(default_factory=DriveParams)
    shift_time_us: float = Field(default=settings.SHIFT_TIME_US, ge=0.0)
    jitter_pad_us: float = Field(default=settings.JITTER_PAD_US, ge=0.0)
    # False: one jitter pad per sequence, after the first shift only
    pad_per_shift: bool = True
    flip_mode: FlipMode = "ideal"

    @property
    def shift_window_us(self) -> float:
        return self.shift_time_us + self.jitter_pad_us


def minimal_shift(delta_x_nm: float, wavelength_nm: float) -> float:
    """Reduce a displacement modulo lambda into (-lambda/2, lambda/2]."""
    half = 0.5 * wavelength_nm
    return half - float(np.mod(half - delta_x_nm, wavelength_nm))


def phase_to_shift(phi: float, drive: DriveParams) -> float:
    if not math.isfinite(phi):
        raise InvalidArgumentError(f"Phase must be finite, got {phi}")
    return minimal_shift(phi / drive.wavevector, drive.wavelength_nm)


class _Program:
    """Accumulates instructions and tracks where the jitter pad has been used."""

    def __init__(self, array_size: int, options: SequenceOptions):
        self.array_size = array_size
        self.options = options
        self.instructions: List = []
        self._padded = False

    def pulse(self, angle: float, drive_phase: float = 0.0) -> "_Program":
        duration = self.options.drive.pulse_duration_us(angle)
        self.instructions.append(GlobalPulse(angle=angle, drive_phase=drive_phase, duration=duration))
        return self

    def wait(self, duration: float) -> "_Program":
        if duration > 0.0:
            self.instructions.append(Wait(duration=duration))
        return self

    def shift(self, shifts: Mapping[int, float]) -> "_Program":
        # Every site is listed so untouched sites visibly get zero distance
        full = {site: float(shifts.get(site, 0.0)) for site in range(self.array_size)}
        self.instructions.append(LocalShift(shifts=full, shift_time=self.options.shift_time_us))
        if self.options.pad_per_shift or not self._padded:
            self.wait(self.options.jitter_pad_us)
            self._padded = True
        return self

    def window(self) -> float:
        """Dark time the next shift() call will occupy."""
        if self.options.pad_per_shift or not self._padded:
            return self.options.shift_window_us
        return self.options.shift_time_us

    def flip(self, sites: Sequence[int]) -> "_Program":
        mode = self.options.flip_mode
        angle_time = self.options.drive.pulse_duration_us(math.pi)
        if mode == "composite":
            window = self.options.shift_window_us
            duration = angle_time + 2.0 * window
        else:
            window = 0.0
            duration = angle_time
        self.instructions.append(
            LocalPiFlip(sites=tuple(sorted(sites)), mode=mode, window=window, duration=duration)
        )
        return self

    def measure(self, bases: Optional[Mapping[int, Basis]] = None) -> "_Program":
        if bases is None:
            bases = {site: "Z" for site in range(self.array_size)}
        self.instructions.append(Measure(bases=dict(bases)))
        return self

    def build(self) -> PulseSequence:
        return PulseSequence(array_size=self.array_size, instructions=self.instructions)


def _opts(options: Optional[SequenceOptions]) -> SequenceOptions:
    return options if options is not None else SequenceOptions()


def build_parity_addressing(n_sites: int, delta_x: float, options: Optional[SequenceOptions] = None) -> PulseSequence:
    """
    Ramsey with every odd site moved by delta_x (nm) between the pulses.

    delta_x is applied as given, without mod-lambda reduction, so a sweep
    over [0, 2 lambda] really moves the atoms that far.
    """
    if n_sites < 2:
        raise InvalidArgumentError(f"Parity addressing needs n_sites >= 2, got {n_sites}")
    if not math.isfinite(delta_x):
        raise InvalidArgumentError(f"delta_x must be finite, got {delta_x}")
    program = _Program(n_sites, _opts(options))
    program.pulse(math.pi / 2)
    program.shift({site: delta_x for site in range(1, n_sites, 2)})
    program.pulse(math.pi / 2)
    return program.measure().build()


def build_phase_pattern(
    phi_pattern: Union[Mapping[int, float], Sequence[float]],
    dark_time: float,
    options: Optional[SequenceOptions] = None,
) -> PulseSequence:
    """Ramsey with a per-site phase imprinted by one parallel move at the middle of the dark time."""
    if isinstance(phi_pattern, Mapping):
        pattern = {int(site): float(phi) for site, phi in phi_pattern.items()}
        array_size = max(pattern) + 1 if pattern else 1
    else:
        pattern = {site: float(phi) for site, phi in enumerate(phi_pattern)}
        array_size = len(pattern)
    if array_size < 1:
        raise InvalidArgumentError("Phase pattern is empty")
    if dark_time < 0.0:
        raise InvalidArgumentError(f"dark_time must be >= 0, got {dark_time}")

    options = _opts(options)
    shifts = {site: phase_to_shift(phi, options.drive) for site, phi in pattern.items()}
    program = _Program(array_size, options)
    edge = max(dark_time - program.window(), 0.0) / 2.0

    program.pulse(math.pi / 2)
    program.wait(edge)
    program.shift(shifts)
    program.wait(edge)
    program.pulse(math.pi / 2)
    return program.measure().build()


def build_cardinal_states(options: Optional[SequenceOptions] = None) -> List[PulseSequence]:
    """
    Six single-site programs taking |0> to the cardinal states, in
    CARDINAL_ORDER. X(pi/2)|0> is already +Y; the other states follow from
    one more pulse or one local phase.
    """
    options = _opts(options)
    drive = options.drive
    recipes = {
        "-Z": [],
        "+Z": [("pulse",), ("pulse",)],
        "-Y": [("pulse",), ("shift", math.pi)],
        "+Y": [("pulse",)],
        "-X": [("pulse",), ("shift", math.pi / 2)],
        "+X": [("pulse",), ("shift", -math.pi / 2)],
    }
    sequences = []
    for label in CARDINAL_ORDER:
        program = _Program(1, options)
        for step in recipes[label]:
            if step[0] == "pulse":
                program.pulse(math.pi / 2)
            else:
                program.shift({0: phase_to_shift(step[1], drive)})
        sequences.append(program.build())
    return sequences


def build_cardinal_array(options: Optional[SequenceOptions] = None) -> PulseSequence:
    """All six cardinal states at once on a 6-site array, site i -> CARDINAL_ORDER[i]."""
    options = _opts(options)
    drive = options.drive
    program = _Program(len(CARDINAL_ORDER), options)
    first = {i: phase_to_shift(CARDINAL_PHASES[label][0], drive) for i, label in enumerate(CARDINAL_ORDER)}
    second = {i: phase_to_shift(CARDINAL_PHASES[label][1], drive) for i, label in enumerate(CARDINAL_ORDER)}
    program.pulse(math.pi / 2)
    program.shift(first)
    program.pulse(math.pi / 2)
    program.shift(second)
    return program.build()


def build_shift_fidelity(
    delta_x: float,
    shift_time: Optional[float] = None,
    n_sites: int = 2,
    options: Optional[SequenceOptions] = None,
) -> PulseSequence:
    """
    Global X(pi) split around a move of the odd sites; at delta_x = lambda the
    move is a Z(2 pi) and the odd sites should end in |1> like the static ones.
    """
    if n_sites < 2:
        raise InvalidArgumentError(f"Shift fidelity needs n_sites >= 2, got {n_sites}")
    options = _opts(options)
    if shift_time is not None:
        options = options.model_copy(update={"shift_time_us": float(shift_time)})
    return build_parity_addressing(n_sites, delta_x, options)


def _readout_shifts(layout: EnsembleLayout, flips_per_ensemble: Mapping[int, int], drive: DriveParams) -> Dict[int, float]:
    """Y sites get Z(-pi/2); ensembles with an odd number of flips get an extra Z(pi)."""
    shifts = {}
    for site in range(layout.n_sites):
        phi = -math.pi / 2 if layout.quadrature[site] == "Y" else 0.0
        if flips_per_ensemble.get(layout.ensemble[site], 0) % 2 == 1:
            phi += math.pi
        shifts[site] = phase_to_shift(phi, drive)
    return shifts


def build_dual_quadrature(
    layout: EnsembleLayout, dark_time: float, options: Optional[SequenceOptions] = None
) -> PulseSequence:
    """
    Ramsey where the Y sites are shifted by a quarter wavelength at the end of
    the dark time, so X sites read (1 + cos theta)/2 and Y sites (1 + sin theta)/2.
    """
    if layout.M != 1:
        raise InvalidArgumentError(f"Dual-quadrature readout takes a single-ensemble layout, got M={layout.M}")
    if dark_time < 0.0:
        raise InvalidArgumentError(f"dark_time must be >= 0, got {dark_time}")
    options = _opts(options)
    program = _Program(layout.n_sites, options)
    program.pulse(math.pi / 2)
    program.wait(max(dark_time - program.window(), 0.0))
    program.shift(_readout_shifts(layout, {}, options.drive))
    program.pulse(math.pi / 2)
    return program.measure().build()


def _compile_flips(
    layout: EnsembleLayout,
    flip_times: Mapping[int, Sequence[float]],
    total_time: float,
    options: SequenceOptions,
) -> PulseSequence:
    """
    Ramsey skeleton with local flips of whole ensembles at absolute dark-clock
    times, then the dual-quadrature readout shift.
    """
    events: Dict[float, List[int]] = {}
    for m, times in flip_times.items():
        for t in times:
            events.setdefault(float(t), []).extend(layout.ensemble_sites(m))

    program = _Program(layout.n_sites, options)
    program.pulse(math.pi / 2)
    clock = 0.0
    for t in sorted(events):
        if options.flip_mode == "composite":
            start = t - 0.5 * options.shift_window_us
            length = 2.0 * options.shift_window_us
        else:
            start = t
            length = 0.0
        if start < clock - 1e-9:
            raise InvalidArgumentError(
                f"Flip at t={t:.3f} us overlaps the previous one; dark time too short for {options.flip_mode} flips"
            )
        program.wait(start - clock)
        program.flip(events[t])
        clock = start + length

    counts = {m: len(times) for m, times in flip_times.items()}
    readout = _readout_shifts(layout, counts, options.drive)
    program.wait(max(total_time - program.window() - clock, 0.0))
    program.shift(readout)
    program.pulse(math.pi / 2)
    return program.measure().build()


def build_local_dd(layout: EnsembleLayout, total_time: float, options: Optional[SequenceOptions] = None) -> PulseSequence:
    """Ensemble 1 flipped at T/4 and ensemble 2 at 3T/8, nets phase fractions 1, 1/2, 1/4."""
    if layout.M != 3:
        raise InvalidArgumentError(f"Local DD takes a three-ensemble layout, got M={layout.M}")
    if total_time <= 0.0:
        raise InvalidArgumentError(f"total_time must be > 0, got {total_time}")
    flip_times = {1: [total_time / 4.0], 2: [3.0 * total_time / 8.0]}
    return _compile_flips(layout, flip_times, total_time, _opts(options))


def kernel_flip_times(M: int, k: int, tau: float) -> Dict[int, List[float]]:
    """
    One flip per kernel for every m >= 1, at t_m = tau (1 - 2^-m) / 2 or its
    mirror tau - t_m, alternating so the last kernel uses t_m.
    """
    flips: Dict[int, List[float]] = {}
    for m in range(1, M):
        t_m = tau * (1.0 - 2.0 ** (-m)) / 2.0
        flips[m] = [i * tau + (t_m if (k - 1 - i) % 2 == 0 else tau - t_m) for i in range(k)]
    return flips


def build_kernel_schedule(
    M: int,
    k: int,
    tau: float,
    layout: Optional[EnsembleLayout] = None,
    options: Optional[SequenceOptions] = None,
) -> Tuple[PulseSequence, SensitivitySchedule]:
    if M < 2 or k < 1 or tau <= 0.0:
        raise InvalidArgumentError(f"Kernel schedule needs M >= 2, k >= 1, tau > 0, got ({M}, {k}, {tau})")
    if layout is None:
        layout = EnsembleLayout.blocks(M)
    elif layout.M != M:
        raise InvalidArgumentError(f"Layout has {layout.M} ensembles, schedule asks for {M}")

    total = k * tau
    flips = kernel_flip_times(M, k, tau)
    schedule = SensitivitySchedule(
        M=M,
        k=k,
        tau=tau,
        flip_times={m: tuple(t / total for t in times) for m, times in flips.items()},
    )
    logger.debug(f"Kernel schedule M={M} k={k} tau={tau}us: {sum(len(v) for v in flips.values())} flips")
    return _compile_flips(layout, flips, total, _opts(options)), schedule


def with_measurement(seq: PulseSequence, basis: Basis = "Z") -> PulseSequence:
    return seq.with_measurement(basis)
