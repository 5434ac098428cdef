import math
from typing import Tuple

import numpy as np
from scipy.special import erfc, erfcinv

from app.estimation.records import PhaseFit, RangeLike, half_range
from app.utils.errors import InvalidArgumentError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)


def _scalar_or_array(value):
    return float(value) if np.ndim(value) == 0 else value


def subtract_qpn_with_flag(sigma_total, sigma_qpn: float) -> Tuple[object, bool]:
    """sqrt(max(total^2 - qpn^2, 0)); the flag is set when any total fell below qpn."""
    total = np.asarray(sigma_total, dtype=float)
    if np.any(total < 0.0) or sigma_qpn < 0.0:
        raise InvalidArgumentError("sigma values must be >= 0")
    difference = total ** 2 - sigma_qpn ** 2
    flagged = bool(np.any(difference < 0.0))
    return _scalar_or_array(np.sqrt(np.maximum(difference, 0.0))), flagged


def subtract_qpn(sigma_total, sigma_qpn: float):
    value, flagged = subtract_qpn_with_flag(sigma_total, sigma_qpn)
    if flagged:
        logger.warning(f"sigma_total below sigma_qpn={sigma_qpn:.5f}; laser contribution clamped to 0")
    return value


def phase_slip_probability(sigma, B: RangeLike):
    """erfc(B / (sqrt2 sigma)), 0 for sigma = 0."""
    half = half_range(B)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0.0):
        raise InvalidArgumentError("sigma must be >= 0")
    with np.errstate(divide="ignore"):
        eps = np.where(sigma > 0.0, erfc(half / (math.sqrt(2.0) * np.where(sigma > 0.0, sigma, 1.0))), 0.0)
    return _scalar_or_array(eps)


def decay_envelope(sigma):
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0.0):
        raise InvalidArgumentError("sigma must be >= 0")
    return _scalar_or_array(np.exp(-0.5 * sigma ** 2))


def slip_sigma(epsilon: float, B: RangeLike) -> float:
    """Phase spread at which the slip probability reaches epsilon."""
    if not (0.0 < epsilon < 1.0):
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon}")
    return half_range(B) / (math.sqrt(2.0) * float(erfcinv(epsilon)))


def t_max(epsilon: float, fit: PhaseFit, B: RangeLike, include_qpn: bool = False) -> float:
    """
    Longest interrogation time at slip probability epsilon,
    T = (B / (sqrt2 beta erfcinv(eps)))^(1/alpha).

    include_qpn spends part of the budget on the fixed projection noise
    first; it returns 0 when projection noise alone already exceeds it.
    """
    if fit.beta <= 0.0:
        raise InvalidArgumentError(f"t_max needs beta > 0, got {fit.beta}")
    target = slip_sigma(epsilon, B)
    if include_qpn:
        if target <= fit.sigma_qpn:
            return 0.0
        target = math.sqrt(target ** 2 - fit.sigma_qpn ** 2)
    return (target / fit.beta) ** (1.0 / fit.alpha)


def metrological_gain_db(alpha: float) -> float:
    """10 log10(2^(1/(2 alpha))): the T_max gain from doubling B, as a sensitivity."""
    if alpha <= 0.0:
        raise InvalidArgumentError(f"alpha must be > 0, got {alpha}")
    return 10.0 * math.log10(2.0 ** (1.0 / (2.0 * alpha)))


def gain_db_from_ranges(fit: PhaseFit, epsilon: float, B_low: RangeLike, B_high: RangeLike) -> float:
    """Same gain from two T_max values, half the dB of the time ratio."""
    ratio = t_max(epsilon, fit, B_high) / t_max(epsilon, fit, B_low)
    return 5.0 * math.log10(ratio)
