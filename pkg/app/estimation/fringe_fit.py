import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.optimize import least_squares

from app.estimation.phase import TWO_PI, estimate_phases, wrap_phase
from app.estimation.records import ShotRecord
from app.utils.errors import FitError, InsufficientDataError, InvalidArgumentError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

MIN_FRINGE_POINTS = 4
_PERIODOGRAM_POINTS = 4001


@dataclass(frozen=True)
class FringeFit:
    """
    P_x = A exp(-(gamma t)^p) cos(2 pi f t + phi0) + 1/2, with P_y the same
    fringe delayed by a quarter turn.
    """
    amplitude: float
    decay_rate: float
    shape: float
    frequency: float
    phase0: float
    frequency_stderr: float = float("nan")
    residual_rms: float = 0.0

    def envelope(self, t) -> np.ndarray:
        return self.amplitude * np.exp(-(self.decay_rate * np.asarray(t, dtype=float)) ** self.shape)

    def p_x(self, t) -> np.ndarray:
        return self.envelope(t) * np.cos(TWO_PI * self.frequency * np.asarray(t, dtype=float) + self.phase0) + 0.5

    def p_y(self, t) -> np.ndarray:
        return self.envelope(t) * np.sin(TWO_PI * self.frequency * np.asarray(t, dtype=float) + self.phase0) + 0.5

    def theta(self, t) -> np.ndarray:
        """Mean phase by inverting the fitted populations."""
        return estimate_phases(self.p_x(t), self.p_y(t))


@dataclass(frozen=True)
class MeanPhaseCurve:
    t: np.ndarray
    theta_bar: np.ndarray
    fit: FringeFit
    n_shots: np.ndarray


def _periodogram_seed(t: np.ndarray, z: np.ndarray) -> float:
    spacing = np.diff(np.unique(t))
    f_max = 0.5 / spacing.min() if spacing.size else 1.0
    grid = np.linspace(-f_max, f_max, _PERIODOGRAM_POINTS)
    power = np.abs(np.exp(-1j * TWO_PI * np.outer(grid, t)) @ z)
    return float(grid[np.argmax(power)])


def fit_fringes(t, p_x, p_y) -> FringeFit:
    """Joint fit of both quadratures, seeded from a two-sided periodogram of z_x + i z_y."""
    t = np.asarray(t, dtype=float)
    p_x = np.asarray(p_x, dtype=float)
    p_y = np.asarray(p_y, dtype=float)
    if not (t.shape == p_x.shape == p_y.shape):
        raise InvalidArgumentError("t, p_x and p_y must have the same shape")
    if t.size < MIN_FRINGE_POINTS:
        raise InsufficientDataError(f"Fringe fit needs >= {MIN_FRINGE_POINTS} time points, got {t.size}")

    # 1. Seeds
    z = (2.0 * p_x - 1.0) + 1j * (2.0 * p_y - 1.0)
    f0 = _periodogram_seed(t, z)
    demodulated = z * np.exp(-1j * TWO_PI * f0 * t)
    phi0 = float(np.angle(demodulated.mean())) if np.abs(demodulated.mean()) > 0 else 0.0
    a0 = float(np.clip(0.5 * np.abs(z).max(), 1e-3, 0.5))
    span = float(np.ptp(t)) or 1.0
    x0 = np.array([a0, 0.1 / span, 1.0, f0, phi0])

    # 2. Joint least squares
    def residuals(params):
        fit = FringeFit(*params)
        return np.concatenate([fit.p_x(t) - p_x, fit.p_y(t) - p_y])

    result = least_squares(
        residuals,
        x0,
        bounds=([0.0, 0.0, 0.5, -np.inf, -np.inf], [0.5 + 1e-9, np.inf, 3.0, np.inf, np.inf]),
        x_scale=[0.1, 1.0 / span, 1.0, 1.0 / span, 1.0],
        ftol=1e-14,
        xtol=1e-14,
        gtol=1e-14,
        max_nfev=5000,
    )
    if not result.success:
        raise FitError("Fringe fit did not converge", {"message": result.message, "seed_frequency": f0})

    amplitude, decay, shape, frequency, phase0 = result.x
    stderr = float("nan")
    dof = 2 * t.size - 5
    if dof > 0:
        try:
            cov = np.linalg.pinv(result.jac.T @ result.jac) * (2.0 * result.cost / dof)
            stderr = float(np.sqrt(max(cov[3, 3], 0.0)))
        except np.linalg.LinAlgError:
            pass

    return FringeFit(
        amplitude=float(amplitude),
        decay_rate=float(decay),
        shape=float(shape),
        frequency=float(frequency),
        phase0=float(wrap_phase(phase0)),
        frequency_stderr=stderr,
        residual_rms=float(np.sqrt(np.mean(result.fun ** 2))),
    )


def mean_phase_curve(records: Sequence[ShotRecord]) -> MeanPhaseCurve:
    """theta_bar(t) from the shot-averaged quadratures, through a decaying-sinusoid fit."""
    if not records:
        raise InsufficientDataError("No shot records")
    frame = pd.DataFrame([{"t": r.t, "p_x": r.p_x, "p_y": r.p_y} for r in records])
    grouped = frame.groupby("t", sort=True).agg(p_x=("p_x", "mean"), p_y=("p_y", "mean"), n=("p_x", "size"))
    t = grouped.index.to_numpy(dtype=float)
    fit = fit_fringes(t, grouped["p_x"].to_numpy(), grouped["p_y"].to_numpy())
    return MeanPhaseCurve(t=t, theta_bar=fit.theta(t), fit=fit, n_shots=grouped["n"].to_numpy())


@dataclass(frozen=True)
class PeriodFit:
    """y = amplitude cos(2 pi x / period + phase) + offset."""
    period: float
    amplitude: float
    phase: float
    offset: float
    period_stderr: float = float("nan")

    def __call__(self, x) -> np.ndarray:
        return self.amplitude * np.cos(TWO_PI * np.asarray(x, dtype=float) / self.period + self.phase) + self.offset


def _linear_sinusoid(x: np.ndarray, y: np.ndarray, period: float) -> Dict[str, float]:
    design = np.column_stack([np.cos(TWO_PI * x / period), np.sin(TWO_PI * x / period), np.ones_like(x)])
    (c, s, offset), *_ = np.linalg.lstsq(design, y, rcond=None)
    # c cos + s sin = R cos(u + phase) with phase = atan2(-s, c)
    return {"amplitude": math.hypot(c, s), "phase": math.atan2(-s, c), "offset": float(offset)}


def fit_period(x, y, period: Optional[float] = None) -> PeriodFit:
    """
    Sinusoid fit of a real-valued sweep. With period given only amplitude,
    phase and offset are fitted (a crosstalk amplitude at a known period).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < MIN_FRINGE_POINTS:
        raise InsufficientDataError(f"Period fit needs >= {MIN_FRINGE_POINTS} matching points")
    if period is not None:
        return PeriodFit(period=float(period), **_linear_sinusoid(x, y, period))

    span = float(np.ptp(x))
    if span == 0.0:
        raise FitError("Sweep has zero extent", {})
    # 1. Scan periods from a quarter of the sweep up to four sweeps
    candidates = np.geomspace(span / max(x.size / 2.0, 4.0), 4.0 * span, 2000)
    scores = []
    for p in candidates:
        params = _linear_sinusoid(x, y, p)
        scores.append(np.sum((PeriodFit(period=p, **params)(x) - y) ** 2))
    best = float(candidates[int(np.argmin(scores))])
    seed = _linear_sinusoid(x, y, best)

    # 2. Refine all four parameters
    def residuals(params):
        return PeriodFit(*params)(x) - y

    result = least_squares(
        residuals,
        [best, seed["amplitude"], seed["phase"], seed["offset"]],
        ftol=1e-14,
        xtol=1e-14,
        gtol=1e-14,
        max_nfev=5000,
    )
    if not result.success:
        raise FitError("Period fit did not converge", {"message": result.message, "seed_period": best})
    period_fit, amplitude, phase, offset = result.x
    stderr = float("nan")
    dof = x.size - 4
    if dof > 0:
        cov = np.linalg.pinv(result.jac.T @ result.jac) * (2.0 * result.cost / dof)
        stderr = float(np.sqrt(max(cov[0, 0], 0.0)))
    if period_fit < 0.0:
        period_fit, phase = -period_fit, -phase
    if amplitude < 0.0:
        amplitude, phase = -amplitude, phase + math.pi
    logger.debug(f"Period fit: {period_fit:.4f} (seed {best:.4f})")
    return PeriodFit(
        period=float(period_fit),
        amplitude=float(amplitude),
        phase=float(wrap_phase(phase)),
        offset=float(offset),
        period_stderr=stderr,
    )
