import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from app.ensembles.unwrap import cascaded_unwrap_array
from app.estimation.phase import wrap_phase
from app.noise.qpn import cached_qpn_sigma
from app.utils.errors import InvalidArgumentError
from app.utils.logger import setup_logger
from app.utils.rng import derive_rng

logger = setup_logger(__name__)

DEFAULT_TRIALS = 100_000


@dataclass(frozen=True)
class SlipEstimate:
    probability: float
    ci_low: float
    ci_high: float
    failures: int
    n_trials: int

    @property
    def stderr(self) -> float:
        p = self.probability
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.n_trials)


def _stage_sigmas(M: int, per_stage_sigma: Optional[Sequence[float]], n_atoms: Optional[int]) -> np.ndarray:
    if per_stage_sigma is not None:
        sigmas = np.asarray(per_stage_sigma, dtype=float)
        if sigmas.shape != (M,):
            raise InvalidArgumentError(f"per_stage_sigma needs {M} values, got {sigmas.size}")
    elif n_atoms is not None:
        sigmas = np.full(M, cached_qpn_sigma(int(n_atoms)))
    else:
        sigmas = np.zeros(M)
    if np.any(sigmas < 0.0):
        raise InvalidArgumentError("Stage sigmas must be >= 0")
    return sigmas


def slip_probability_multi(
    sigma_full: float,
    M: int,
    per_stage_sigma: Optional[Sequence[float]] = None,
    n_trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    n_atoms: Optional[int] = None,
) -> SlipEstimate:
    """
    Fraction of trials in which cascaded unwrapping misses the true phase
    by pi or more.

    The true phase and the per-stage noise come from the same streams for
    every M, so curves over M share random numbers. per_stage_sigma is
    ordered slow to fast; without it, n_atoms selects the projection-noise
    spread of that many atoms per quadrature, else readings are noiseless.
    """
    if sigma_full < 0.0:
        raise InvalidArgumentError(f"sigma_full must be >= 0, got {sigma_full}")
    if M < 1 or n_trials < 1:
        raise InvalidArgumentError(f"Need M >= 1 and n_trials >= 1, got ({M}, {n_trials})")
    sigmas = _stage_sigmas(M, per_stage_sigma, n_atoms)

    theta = derive_rng(seed, "slip", "truth").normal(0.0, sigma_full, n_trials)
    # Column s holds the ensemble with fraction 2^(s - (M-1)); its noise stream is keyed by that fraction
    fractions = 2.0 ** (np.arange(M) - (M - 1))
    noise = np.column_stack([
        derive_rng(seed, "slip", "stage-noise", M - 1 - s).standard_normal(n_trials) for s in range(M)
    ])
    readings = wrap_phase(theta[:, None] * fractions[None, :] + noise * sigmas[None, :])

    theta_full, _ = cascaded_unwrap_array(readings)
    failures = int(np.count_nonzero(np.abs(theta_full - theta) >= math.pi))
    interval = binomtest(failures, n_trials).proportion_ci(confidence_level=0.95)
    logger.debug(f"Slip MC sigma={sigma_full:.4f} M={M}: {failures}/{n_trials}")
    return SlipEstimate(
        probability=failures / n_trials,
        ci_low=float(interval.low),
        ci_high=float(interval.high),
        failures=failures,
        n_trials=n_trials,
    )


def ideal_stability_gain(M: int) -> float:
    """sqrt(2^(M-1) / M)."""
    if M < 1:
        raise InvalidArgumentError(f"M must be >= 1, got {M}")
    return math.sqrt(2.0 ** (M - 1) / M)
