from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from langsmith import traceable

from app.config.settings import settings
from app.noise.gate_errors import GateErrorParams
from app.noise.laser import LaserNoiseParams, sample_trajectory
from app.noise.spam import SpamParams
from app.qubit.gates import local_phase_amplitudes, rotate_amplitudes
from app.qubit.state import DriveParams
from app.qubit.tomography import READOUT_PHASES
from app.sequence.analysis import dark_clock
from app.sequence.instructions import GlobalPulse, LocalPiFlip, LocalShift, Measure, PulseSequence
from app.utils.errors import InvalidArgumentError
from app.utils.logger import setup_logger
from app.utils.rng import derive_rng

logger = setup_logger(__name__)

# theta(t) for dark-clock times in microseconds -> (n_shots, len(t)) or (len(t),)
PhaseFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ShotOutcomes:
    """Everything one simulated batch produced, indexed [shot, site]."""
    p_excited: np.ndarray
    outcomes: np.ndarray
    amp0: np.ndarray
    amp1: np.ndarray
    bases: List[str]
    dark_time: float

    @property
    def n_shots(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n_sites(self) -> int:
        return self.outcomes.shape[1]

    def population(self) -> np.ndarray:
        """Measured excited fraction per site, averaged over shots."""
        return self.outcomes.mean(axis=0)

    def ideal_population(self) -> np.ndarray:
        return self.p_excited.mean(axis=0)

    def fraction(self, sites: Sequence[int]) -> np.ndarray:
        """Per-shot excited fraction of a group of sites."""
        return self.outcomes[:, list(sites)].mean(axis=1)

    def counts(self, sites: Sequence[int]) -> np.ndarray:
        return self.outcomes[:, list(sites)].sum(axis=1)

    def density_matrix(self, site: int) -> np.ndarray:
        """Shot-averaged state of one site before readout."""
        v = np.stack([self.amp0[:, site], self.amp1[:, site]], axis=1)
        return np.einsum("si,sj->ij", v, v.conj()) / self.n_shots


class SequenceSimulator:
    """
    Executes a PulseSequence on every site and shot at once.

    The simulation runs in the lab frame: a move never touches the state, it
    changes the drive phase the site sees from then on. The returned
    amplitudes are rotated into the moved frame so they can be compared with
    target states directly.
    """

    def __init__(self, drive: Optional[DriveParams] = None):
        self.drive = drive or DriveParams()

    @traceable(name="simulate_sequence", run_type="chain")
    def run(
        self,
        seq: PulseSequence,
        n_shots: int,
        seed: int,
        noise: Optional[LaserNoiseParams] = None,
        spam: Optional[SpamParams] = None,
        errors: Optional[GateErrorParams] = None,
    ) -> ShotOutcomes:
        if n_shots < 1:
            raise InvalidArgumentError(f"n_shots must be >= 1, got {n_shots}")
        phase_fn = None
        if noise is not None and not noise.is_silent:
            phase_fn = self._trajectory_phases(seq, noise, n_shots, seed)
        return self.run_with_phases(seq, phase_fn, n_shots, seed, spam=spam, errors=errors)

    def _trajectory_phases(self, seq: PulseSequence, noise: LaserNoiseParams, n_shots: int, seed: int) -> PhaseFunction:
        times = np.array(sorted(set(self._pulse_times(seq))), dtype=float)
        grid = np.unique(np.concatenate([[0.0], times / settings.FIT_TIME_UNIT_US]))
        trajectory = sample_trajectory(noise, grid, derive_rng(seed, "laser"), n_paths=n_shots)

        def phase_fn(t_us: np.ndarray) -> np.ndarray:
            return trajectory.at(np.asarray(t_us, dtype=float) / settings.FIT_TIME_UNIT_US)

        return phase_fn

    @staticmethod
    def _pulse_times(seq: PulseSequence) -> List[float]:
        times = []
        for start, instruction in zip(dark_clock(seq), seq.instructions):
            if isinstance(instruction, GlobalPulse):
                times.append(start)
            elif isinstance(instruction, LocalPiFlip):
                times.append(start + instruction.flip_offset)
        times.append(seq.dark_time)
        return times

    def run_with_phases(
        self,
        seq: PulseSequence,
        phase_fn: Optional[PhaseFunction],
        n_shots: int,
        seed: int,
        spam: Optional[SpamParams] = None,
        errors: Optional[GateErrorParams] = None,
    ) -> ShotOutcomes:
        """Same as run() with a caller-supplied laser phase theta(t)."""
        if n_shots < 1:
            raise InvalidArgumentError(f"n_shots must be >= 1, got {n_shots}")
        spam = spam or SpamParams.perfect()
        errors = errors or GateErrorParams()
        n_sites = seq.array_size
        k_eff = self.drive.wavevector * (1.0 + self.drive.distance_scale_error)
        error_rng = derive_rng(seed, "gate-errors")

        def laser(t: float) -> np.ndarray:
            if phase_fn is None:
                return np.zeros((n_shots, 1))
            theta = np.asarray(phase_fn(np.array([t])), dtype=float)
            return np.broadcast_to(theta.reshape(-1, 1), (n_shots, 1)) if theta.ndim else np.full((n_shots, 1), float(theta))

        amp0 = np.ones((n_shots, n_sites), dtype=complex)
        amp1 = np.zeros((n_shots, n_sites), dtype=complex)
        frame = np.zeros(n_sites)

        def pulse(a0, a1, angle, drive_phase, t, mask=None):
            phase = drive_phase + laser(t) + frame[None, :]
            n0, n1 = rotate_amplitudes(a0, a1, angle, phase)
            n0, n1 = errors.apply(n0, n1, angle, error_rng)
            if mask is None:
                return n0, n1
            return np.where(mask, n0, a0), np.where(mask, n1, a1)

        # 1. Coherent evolution
        for start, instruction in zip(dark_clock(seq), seq.instructions):
            if isinstance(instruction, GlobalPulse):
                amp0, amp1 = pulse(amp0, amp1, instruction.angle, instruction.drive_phase, start)
            elif isinstance(instruction, LocalShift):
                moved = np.zeros(n_sites, dtype=bool)
                for site, dx in instruction.shifts.items():
                    frame[site] += k_eff * dx
                    moved[site] = dx != 0.0
                amp0, amp1 = errors.apply_shift(amp0, amp1, moved[None, :], error_rng)
            elif isinstance(instruction, LocalPiFlip):
                targets = np.zeros(n_sites, dtype=bool)
                targets[list(instruction.sites)] = True
                t_flip = start + instruction.flip_offset
                if instruction.mode == "ideal":
                    amp0, amp1 = pulse(amp0, amp1, np.pi, 0.0, t_flip, mask=targets[None, :])
                else:
                    # Half a wavelength on the spectators turns the second half pulse into an undo.
                    # Both halves see the laser phase at the flip time, like any instantaneous pulse.
                    detour = np.where(targets, 0.0, np.pi * (1.0 + self.drive.distance_scale_error))
                    amp0, amp1 = pulse(amp0, amp1, np.pi / 2, 0.0, t_flip)
                    frame += detour
                    amp0, amp1 = errors.apply_shift(amp0, amp1, ~targets[None, :], error_rng)
                    amp0, amp1 = pulse(amp0, amp1, np.pi / 2, 0.0, t_flip)
                    frame -= detour
                    amp0, amp1 = errors.apply_shift(amp0, amp1, ~targets[None, :], error_rng)

        # 2. Effective state in the moved frame
        eff0, eff1 = local_phase_amplitudes(amp0, amp1, frame[None, :])

        # 3. Tomography readout pulses
        measured = seq.measurement
        bases = [measured.get(site, "Z") for site in range(n_sites)]
        rotated = np.array([b != "Z" for b in bases])
        if rotated.any():
            readout_phase = np.array([READOUT_PHASES[b] if b != "Z" else 0.0 for b in bases])
            theta_end = laser(seq.dark_time)
            r0, r1 = rotate_amplitudes(eff0, eff1, np.pi / 2, readout_phase[None, :] + theta_end)
            read1 = np.where(rotated[None, :], r1, eff1)
        else:
            read1 = eff1
        p_excited = np.clip(np.abs(read1) ** 2, 0.0, 1.0)

        # 4. Projective readout through the SPAM channel, one stream per site
        outcomes = np.empty((n_shots, n_sites), dtype=bool)
        for site in range(n_sites):
            rng = derive_rng(seed, "readout", site)
            true_excited = rng.random(n_shots) < p_excited[:, site]
            if rotated[site] and spam.readout_pulse_fidelity < 1.0:
                true_excited ^= rng.random(n_shots) >= spam.readout_pulse_fidelity
            outcomes[:, site] = true_excited if spam.is_perfect else spam.sample(true_excited, rng)

        logger.debug(
            f"Simulated {n_shots} shots x {n_sites} sites, dark time {seq.dark_time:.1f} us, "
            f"{len(seq.instructions)} instructions"
        )
        return ShotOutcomes(
            p_excited=p_excited,
            outcomes=outcomes,
            amp0=eff0,
            amp1=eff1,
            bases=bases,
            dark_time=seq.dark_time,
        )
