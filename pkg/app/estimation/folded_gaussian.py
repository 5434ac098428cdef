import math
from typing import Dict, Literal, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit, minimize_scalar

from app.config.settings import settings
from app.estimation.records import RangeLike, half_range
from app.utils.errors import FitError, InsufficientDataError, InvalidArgumentError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

FoldMode = Literal["wrap", "reflect"]
FitMethod = Literal["mle", "histogram"]
Pooling = Literal["joint", "per-ensemble"]


def _image_count(sigma: float, B: float, period: float) -> int:
    # Images beyond K periods contribute less than the tolerance times the central term
    reach = sigma * math.sqrt(-2.0 * math.log(settings.FOLD_IMAGE_TOLERANCE)) + B
    return min(int(math.ceil(reach / period)) + 1, settings.FOLD_MAX_IMAGES)


def folded_density(x, sigma: float, B: RangeLike, mode: FoldMode = "wrap") -> np.ndarray:
    """
    Density on [-B, B] of a zero-mean Gaussian of width sigma after folding.

    wrap: x ~ x + 2B (the dual-quadrature estimate). reflect: the triangle
    fold of an arcsin readout, images at x + 4Bj and 2B - x + 4Bj.
    """
    B = half_range(B)
    x = np.asarray(x, dtype=float)
    if sigma <= 0.0:
        raise InvalidArgumentError(f"sigma must be > 0, got {sigma}")
    period = 2.0 * B if mode == "wrap" else 4.0 * B
    K = _image_count(sigma, B, period)
    shifts = period * np.arange(-K, K + 1)
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * sigma)

    images = x[..., None] + shifts
    density = np.exp(-0.5 * (images / sigma) ** 2).sum(axis=-1)
    if mode == "reflect":
        mirrored = (2.0 * B - x)[..., None] + shifts
        density = density + np.exp(-0.5 * (mirrored / sigma) ** 2).sum(axis=-1)
    return norm * density


def _check_samples(deviations, B: float) -> np.ndarray:
    x = np.asarray(deviations, dtype=float).ravel()
    if x.size < settings.MIN_FOLDED_SAMPLES:
        raise InsufficientDataError(
            f"Folded Gaussian fit needs >= {settings.MIN_FOLDED_SAMPLES} samples, got {x.size}"
        )
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("Deviations must be finite")
    if np.any(np.abs(x) > B + 1e-9):
        raise InvalidArgumentError(f"Deviations must lie inside [-{B:.6f}, {B:.6f}]")
    return x


def _fit_mle(x: np.ndarray, B: float, mode: FoldMode) -> float:
    def negative_log_likelihood(log_sigma: float) -> float:
        density = folded_density(x, math.exp(log_sigma), B, mode)
        return -float(np.sum(np.log(np.maximum(density, 1e-300))))

    lower, upper = math.log(1e-6 * B), math.log(20.0 * B)
    result = minimize_scalar(negative_log_likelihood, bounds=(lower, upper), method="bounded",
                             options={"xatol": 1e-10})
    if not result.success:
        raise FitError("Folded Gaussian likelihood did not converge", {"message": str(result.message)})
    return math.exp(result.x)


def _fit_histogram(x: np.ndarray, B: float, mode: FoldMode, bins: int) -> float:
    counts, edges = np.histogram(x, bins=bins, range=(-B, B), density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    sigma0 = max(float(np.std(x)), 1e-3 * B)
    try:
        popt, _ = curve_fit(
            lambda c, sigma: folded_density(c, sigma, B, mode),
            centers,
            counts,
            p0=[sigma0],
            bounds=([1e-6 * B], [20.0 * B]),
        )
    except (RuntimeError, ValueError) as e:
        raise FitError(f"Histogram fit failed: {e}", {"bins": bins, "sigma0": sigma0}) from e
    return float(popt[0])


def fit_folded_gaussian(
    deviations: Sequence[float],
    fold_range: RangeLike,
    method: FitMethod = "mle",
    mode: FoldMode = "wrap",
    bins: int = 40,
) -> float:
    """Width of the zero-mean Gaussian whose fold into [-B, B] best explains the deviations."""
    B = half_range(fold_range)
    x = _check_samples(deviations, B)
    if method == "mle":
        sigma = _fit_mle(x, B, mode)
    elif method == "histogram":
        sigma = _fit_histogram(x, B, mode, bins)
    else:
        raise InvalidArgumentError(f"Unknown fit method {method!r}")
    logger.debug(f"Folded fit ({method}, {mode}, B={B:.4f}, n={x.size}): sigma={sigma:.5f}")
    return sigma


def deviation_sigma(
    deviations: Mapping[str, Sequence[float]],
    fold_range: RangeLike,
    pooling: Pooling = "joint",
    method: FitMethod = "mle",
    mode: FoldMode = "wrap",
) -> float:
    """
    sigma at one time point from grouped deviations.

    joint fits all groups together; per-ensemble fits each group and pools
    the variances weighted by sample count.
    """
    groups: Dict[str, np.ndarray] = {k: np.asarray(v, dtype=float).ravel() for k, v in deviations.items()}
    if not groups:
        raise InsufficientDataError("No deviations given")
    if pooling == "joint":
        return fit_folded_gaussian(np.concatenate(list(groups.values())), fold_range, method, mode)
    if pooling != "per-ensemble":
        raise InvalidArgumentError(f"Unknown pooling {pooling!r}")

    total = sum(v.size for v in groups.values())
    variance = 0.0
    for name, values in groups.items():
        sigma = fit_folded_gaussian(values, fold_range, method, mode)
        variance += sigma ** 2 * values.size / total
    return math.sqrt(variance)


def sample_folded(sigma: float, fold_range: RangeLike, n: int, rng: np.random.Generator,
                  mode: FoldMode = "wrap", mean: Optional[float] = 0.0) -> np.ndarray:
    """Draw from the folded model, used by the estimator's property checks."""
    B = half_range(fold_range)
    raw = rng.normal(mean, sigma, n)
    if mode == "wrap":
        return B - np.mod(B - raw, 2.0 * B)
    return np.arcsin(np.sin(raw * (math.pi / (2.0 * B)))) * (2.0 * B / math.pi)
