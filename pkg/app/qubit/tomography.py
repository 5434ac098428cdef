"""
Single-qubit state tomography.

Bloch convention: +Z is the excited state |1>, |+X> = (|0>+|1>)/sqrt2 and
|+Y> = (|0>-i|1>)/sqrt2 = X(pi/2)|0>. Readout in X uses a pi/2 pulse of
drive phase pi/2, readout in Y a pi/2 pulse of drive phase 0, so that the
target axis always maps to the excited state.
"""
import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

from app.qubit.state import QubitState
from app.utils.errors import InvalidArgumentError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)

# Drive phase of the pi/2 readout pulse per basis; None means no pulse
READOUT_PHASES: Dict[str, float] = {"X": math.pi / 2, "Y": 0.0, "Z": None}

_SQRT_HALF = 1.0 / math.sqrt(2.0)
CARDINAL_STATES: Dict[str, QubitState] = {
    "-Z": QubitState(1.0 + 0j, 0j),
    "+Z": QubitState(0j, 1.0 + 0j),
    "+X": QubitState(_SQRT_HALF + 0j, _SQRT_HALF + 0j),
    "-X": QubitState(_SQRT_HALF + 0j, -_SQRT_HALF + 0j),
    "+Y": QubitState(_SQRT_HALF + 0j, -1j * _SQRT_HALF),
    "-Y": QubitState(_SQRT_HALF + 0j, 1j * _SQRT_HALF),
}


def cardinal_state(label: str) -> QubitState:
    try:
        return CARDINAL_STATES[label]
    except KeyError:
        raise InvalidArgumentError(f"Unknown cardinal state {label!r}, expected one of {sorted(CARDINAL_STATES)}")


def bloch_vector(state: QubitState) -> np.ndarray:
    cross = np.conj(state.amp0) * state.amp1
    return np.array([
        2.0 * cross.real,
        -2.0 * cross.imag,
        abs(state.amp1) ** 2 - abs(state.amp0) ** 2,
    ])


@dataclass(frozen=True)
class TomographyResult:
    rho: np.ndarray
    bloch: np.ndarray
    # True when finite sampling put the raw vector outside the Bloch ball
    projected: bool


def tomography_reconstruct(px: float, py: float, pz: float) -> TomographyResult:
    """
    Rebuild rho = (I + r.sigma)/2 from excited populations measured in the
    X, Y and Z bases (r_i = 2 p_i - 1).
    """
    for name, p in (("px", px), ("py", py), ("pz", pz)):
        if not (0.0 <= p <= 1.0):
            raise InvalidArgumentError(f"{name} must lie in [0, 1], got {p}")

    r = np.array([2.0 * px - 1.0, 2.0 * py - 1.0, 2.0 * pz - 1.0])
    length = float(np.linalg.norm(r))
    projected = length > 1.0
    if projected:
        logger.warning(f"Bloch vector length {length:.4f} > 1, projecting onto the sphere")
        r = r / length

    rho = 0.5 * (IDENTITY + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z)
    return TomographyResult(rho=rho, bloch=r, projected=projected)


def state_fidelity(rho, target: QubitState) -> float:
    """F = <psi|rho|psi>, clamped to [0, 1]."""
    if isinstance(rho, TomographyResult):
        rho = rho.rho
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidArgumentError(f"rho must be 2x2, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=1e-9):
        raise InvalidArgumentError("rho is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"rho must have unit trace, got {np.trace(rho)}")

    psi = target.as_vector()
    fidelity = float(np.real(psi.conj() @ rho @ psi))
    return min(max(fidelity, 0.0), 1.0)
