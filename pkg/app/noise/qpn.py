from functools import lru_cache

import numpy as np

from app.config.settings import settings
from app.estimation.phase import estimate_phases, phase_deviation
from app.utils.errors import InvalidArgumentError
from app.utils.logger import setup_logger
from app.utils.rng import derive_rng

logger = setup_logger(__name__)

MIN_TRIALS = 10_000


def qpn_sigma_oracle(n_atoms_per_quadrature: int, contrast: float, n_trials: int, seed) -> float:
    """
    Monte Carlo spread of the dual-quadrature phase estimate from projection
    noise alone.

    True phases are uniform on [-pi, pi); both quadratures are binomially
    sampled with fringe contrast `contrast`. A shot whose quadrature vector is
    exactly zero carries no phase information and is scored as a uniform
    guess. Returns the RMS deviation in radians.
    """
    if n_atoms_per_quadrature < 1:
        raise InvalidArgumentError(f"n_atoms_per_quadrature must be >= 1, got {n_atoms_per_quadrature}")
    if not (0.0 < contrast <= 1.0):
        raise InvalidArgumentError(f"contrast must lie in (0, 1], got {contrast}")
    if n_trials < MIN_TRIALS:
        raise InvalidArgumentError(f"n_trials must be >= {MIN_TRIALS}, got {n_trials}")

    rng = derive_rng(int(seed), "qpn-oracle", n_atoms_per_quadrature)
    theta = rng.uniform(-np.pi, np.pi, n_trials)
    n = n_atoms_per_quadrature
    k_x = rng.binomial(n, 0.5 * (1.0 + contrast * np.cos(theta)))
    k_y = rng.binomial(n, 0.5 * (1.0 + contrast * np.sin(theta)))

    estimate = estimate_phases(k_x / n, k_y / n)
    undefined = np.isnan(estimate)
    if undefined.any():
        estimate[undefined] = rng.uniform(-np.pi, np.pi, int(undefined.sum()))

    deviation = phase_deviation(estimate, theta)
    sigma = float(np.sqrt(np.mean(deviation ** 2)))
    logger.debug(f"QPN oracle N={n} C={contrast}: sigma={sigma:.5f} rad ({int(undefined.sum())} undefined shots)")
    return sigma


@lru_cache(maxsize=128)
def cached_qpn_sigma(n_atoms_per_quadrature: int, contrast: float = 1.0, seed: int = 0) -> float:
    return qpn_sigma_oracle(n_atoms_per_quadrature, contrast, settings.QPN_TRIALS, seed)
