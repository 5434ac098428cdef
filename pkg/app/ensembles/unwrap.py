import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.estimation.phase import TWO_PI, wrap_phase
from app.utils.errors import InvalidArgumentError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

_LADDER_TOLERANCE = 1e-12
_RANGE_TOLERANCE = 1e-9
# A stage whose branch pick lands this far from the prediction is suspect
SLIP_RESIDUAL = math.pi / 2


@dataclass(frozen=True)
class EnsembleEstimate:
    m: int
    fraction: float
    theta_hat: float
    n_x: int = 0
    n_y: int = 0

    @classmethod
    def for_ensemble(cls, m: int, theta_hat: float, n_x: int = 0, n_y: int = 0) -> "EnsembleEstimate":
        return cls(m=m, fraction=2.0 ** (-m), theta_hat=theta_hat, n_x=n_x, n_y=n_y)


@dataclass(frozen=True)
class UnwrapResult:
    theta_full: float
    branch_choices: Tuple[int, ...]
    slip_flag: bool
    residuals: Tuple[float, ...] = field(default_factory=tuple)


def _check_ladder(estimates: Sequence[EnsembleEstimate]) -> None:
    if not estimates:
        raise InvalidArgumentError("No ensemble estimates given")
    M = len(estimates)
    for s, estimate in enumerate(estimates):
        expected = 2.0 ** (s - (M - 1))
        if abs(estimate.fraction - expected) > _LADDER_TOLERANCE:
            raise InvalidArgumentError(
                f"Stage {s} has fraction {estimate.fraction}, expected {expected} for a slow-to-fast ladder"
            )
        if not math.isfinite(estimate.theta_hat) or abs(estimate.theta_hat) > math.pi + _RANGE_TOLERANCE:
            raise InvalidArgumentError(f"Stage {s}: theta_hat={estimate.theta_hat} outside (-pi, pi]")
        if estimate.n_x and estimate.n_y and estimate.n_x != estimate.n_y:
            logger.warning(f"Ensemble {estimate.m}: unequal quadrature atom counts ({estimate.n_x}, {estimate.n_y})")


def _nearest_branch(prediction: float, theta_hat: float) -> int:
    x = (prediction - theta_hat) / TWO_PI
    lower = math.floor(x)
    if abs((x - lower) - 0.5) < 1e-12:
        # Equidistant branches: keep the smaller unwrapped magnitude
        return min((lower, lower + 1), key=lambda k: (abs(theta_hat + TWO_PI * k), k))
    return int(round(x))


def cascaded_unwrap(
    estimates: Sequence[EnsembleEstimate],
    branch_faults: Optional[Mapping[int, int]] = None,
) -> UnwrapResult:
    """
    Unwrap the fastest ensemble's phase with the slower ones.

    Stages run slow to fast. Each stage doubles the running estimate and
    picks the 2 pi branch of its own reading nearest to that prediction.
    branch_faults adds a forced offset to the pick at a stage; a +1 fault at
    stage s moves theta_full by 2 pi 2^(M-1-s).
    """
    _check_ladder(estimates)
    faults = dict(branch_faults or {})
    running = float(wrap_phase(estimates[0].theta_hat))
    choices: List[int] = [0]
    residuals: List[float] = [0.0]
    if faults.get(0):
        running += TWO_PI * faults[0]
        choices[0] = faults[0]

    for s in range(1, len(estimates)):
        theta_hat = float(wrap_phase(estimates[s].theta_hat))
        prediction = 2.0 * running
        k = _nearest_branch(prediction, theta_hat) + faults.get(s, 0)
        running = theta_hat + TWO_PI * k
        choices.append(k)
        residuals.append(running - prediction)

    slip = any(abs(r) > SLIP_RESIDUAL for r in residuals)
    return UnwrapResult(theta_full=running, branch_choices=tuple(choices), slip_flag=slip, residuals=tuple(residuals))


def fault_displacement(M: int, stage: int) -> float:
    """theta_full shift caused by a single +1 branch fault at `stage`."""
    if not 0 <= stage < M:
        raise InvalidArgumentError(f"stage must lie in [0, {M}), got {stage}")
    return TWO_PI * 2.0 ** (M - 1 - stage)


def cascaded_unwrap_array(theta_hats: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorised cascaded_unwrap over trials, theta_hats shaped (n, M) slow to
    fast. Half-way ties round to even here; they have probability zero for
    continuous noise.
    """
    theta_hats = np.atleast_2d(np.asarray(theta_hats, dtype=float))
    running = theta_hats[:, 0].copy()
    slip = np.zeros(theta_hats.shape[0], dtype=bool)
    for s in range(1, theta_hats.shape[1]):
        prediction = 2.0 * running
        k = np.round((prediction - theta_hats[:, s]) / TWO_PI)
        running = theta_hats[:, s] + TWO_PI * k
        slip |= np.abs(running - prediction) > SLIP_RESIDUAL
    return running, slip


def ladder_readings(theta_true: float, M: int) -> List[EnsembleEstimate]:
    """Noiseless readings of every ensemble, slow to fast."""
    return [
        EnsembleEstimate.for_ensemble(m, float(wrap_phase(theta_true * 2.0 ** (-m))))
        for m in range(M - 1, -1, -1)
    ]
