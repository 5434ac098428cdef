from typing import Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit

from app.estimation.records import PhaseFit
from app.utils.errors import FitError, InsufficientDataError, InvalidArgumentError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

MIN_TIME_POINTS = 5
ALPHA_BOUNDS = (1e-3, 3.0)
# Laser spread below this at the last time point leaves alpha undetermined
_IDENTIFIABLE_SPREAD = 1e-6


def _loglog_guess(t: np.ndarray, laser: np.ndarray) -> Tuple[float, float]:
    usable = laser > 0.0
    if usable.sum() < 2 or np.ptp(np.log(t[usable])) == 0.0:
        return 0.0, 1.0
    alpha, log_beta = np.polyfit(np.log(t[usable]), np.log(laser[usable]), 1)
    alpha = float(np.clip(alpha, *ALPHA_BOUNDS))
    return float(np.exp(log_beta)), alpha


def fit_sigma_growth(sigma_by_time: Sequence[Tuple[float, float]], sigma_qpn: float) -> PhaseFit:
    """
    Fit sigma(t) = sqrt((beta t^alpha)^2 + sigma_qpn^2) with sigma_qpn held fixed.

    The start point comes from a straight line through log(t) against
    log of the QPN-subtracted spread.
    """
    data = np.asarray(sigma_by_time, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise InvalidArgumentError("sigma_by_time must be a list of (t, sigma) pairs")
    if data.shape[0] < MIN_TIME_POINTS:
        raise InsufficientDataError(f"Growth fit needs >= {MIN_TIME_POINTS} time points, got {data.shape[0]}")
    t, sigma = data[:, 0], data[:, 1]
    if np.any(sigma < 0.0) or sigma_qpn < 0.0 or not np.all(np.isfinite(data)):
        raise InvalidArgumentError("sigma values must be finite and >= 0")
    if np.any(t <= 0.0):
        raise InvalidArgumentError("Times must be > 0")
    if np.ptp(t) == 0.0:
        raise FitError("All time points are equal; beta and alpha cannot be separated", {"t": float(t[0])})

    # 1. Start point
    laser = np.sqrt(np.maximum(sigma ** 2 - sigma_qpn ** 2, 0.0))
    beta0, alpha0 = _loglog_guess(t, laser)
    if beta0 == 0.0:
        logger.warning("No laser spread above projection noise; returning beta=0 with alpha unidentifiable")
        return PhaseFit(
            beta=0.0,
            alpha=alpha0,
            sigma_qpn=sigma_qpn,
            alpha_identifiable=False,
            residual_rms=float(np.sqrt(np.mean((sigma - sigma_qpn) ** 2))),
        )

    # 2. Least squares on sigma itself
    def model(tt, beta, alpha):
        return np.sqrt((beta * tt ** alpha) ** 2 + sigma_qpn ** 2)

    try:
        popt, pcov = curve_fit(
            model,
            t,
            sigma,
            p0=[beta0, alpha0],
            bounds=([0.0, ALPHA_BOUNDS[0]], [np.inf, ALPHA_BOUNDS[1]]),
            ftol=1e-15,
            xtol=1e-15,
            gtol=1e-15,
            max_nfev=10_000,
        )
    except (RuntimeError, ValueError) as e:
        raise FitError(f"sigma(t) fit failed: {e}", {"beta0": beta0, "alpha0": alpha0}) from e

    beta, alpha = float(popt[0]), float(popt[1])
    residual = sigma - model(t, beta, alpha)

    # 3. Identifiability
    identifiable = bool(np.all(np.isfinite(pcov)) and beta * t.max() ** alpha > _IDENTIFIABLE_SPREAD)
    if not identifiable:
        logger.warning(f"alpha not identifiable (beta={beta:.3g}); treat alpha={alpha:.3f} as unconstrained")

    logger.info(f"sigma(t) fit: beta={beta:.5f}, alpha={alpha:.4f} over {t.size} points")
    return PhaseFit(
        beta=beta,
        alpha=alpha,
        sigma_qpn=sigma_qpn,
        covariance=np.asarray(pcov, dtype=float),
        alpha_identifiable=identifiable,
        residual_rms=float(np.sqrt(np.mean(residual ** 2))),
    )
