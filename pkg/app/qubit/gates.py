import math
from typing import Tuple

import numpy as np

from app.qubit.state import DriveParams, QubitState
from app.utils.errors import InvalidArgumentError
from app.utils.rng import as_rng


def rotate_amplitudes(amp0, amp1, angle, drive_phase) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorised drive pulse:
    U = cos(a/2) I - i sin(a/2) (cos(p) sx + sin(p) sy).

    All arguments broadcast, so one call evolves every shot and site.
    """
    c = np.cos(np.asarray(angle) / 2.0)
    s = np.sin(np.asarray(angle) / 2.0)
    # -i sin(a/2) e^{-ip} couples |1> into |0>, -i sin(a/2) e^{+ip} the reverse
    e_minus = np.exp(-1j * np.asarray(drive_phase))
    e_plus = np.exp(1j * np.asarray(drive_phase))
    new0 = c * amp0 - 1j * s * e_minus * amp1
    new1 = -1j * s * e_plus * amp0 + c * amp1
    return new0, new1


def local_phase_amplitudes(amp0, amp1, phi) -> Tuple[np.ndarray, np.ndarray]:
    return amp0, amp1 * np.exp(-1j * np.asarray(phi))


def rotate_global(state: QubitState, angle: float, drive_phase: float) -> QubitState:
    if not (math.isfinite(angle) and math.isfinite(drive_phase)):
        raise InvalidArgumentError(f"Pulse angle and phase must be finite, got ({angle}, {drive_phase})")
    a0, a1 = rotate_amplitudes(state.amp0, state.amp1, angle, drive_phase)
    return QubitState(complex(a0), complex(a1))


def phase_shift_from_move(delta_x_nm: float, drive: DriveParams) -> float:
    """phi = k * dx, left unwrapped."""
    return drive.wavevector * delta_x_nm * (1.0 + drive.distance_scale_error)


def apply_local_phase(state: QubitState, phi: float) -> QubitState:
    """
    Advance the relative phase by phi (|1> picks up e^{-i phi}).

    Followed by a single global pulse this is indistinguishable from moving
    the atom by phi/k.
    """
    if not math.isfinite(phi):
        raise InvalidArgumentError(f"Local phase must be finite, got {phi}")
    a0, a1 = local_phase_amplitudes(state.amp0, state.amp1, phi)
    return QubitState(complex(a0), complex(a1))


def measure_population(state: QubitState, n_shots: int, rng_seed) -> int:
    if n_shots < 1:
        raise InvalidArgumentError(f"n_shots must be >= 1, got {n_shots}")
    rng = as_rng(rng_seed)
    p = min(max(state.excited_population, 0.0), 1.0)
    return int(rng.binomial(n_shots, p))
