import math

import numpy as np

from app.estimation.records import ShotRecord
from app.utils.errors import InvalidArgumentError, UndefinedPhaseError

TWO_PI = 2.0 * math.pi


def wrap_phase(x):
    """Map onto (-pi, pi]; -pi itself goes to +pi."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), TWO_PI)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def phase_from_populations(p_x: float, p_y: float) -> float:
    z_x = 2.0 * p_x - 1.0
    z_y = 2.0 * p_y - 1.0
    if z_x == 0.0 and z_y == 0.0:
        raise UndefinedPhaseError("P_x = P_y = 0.5: the quadrature vector is zero and has no phase")
    return wrap_phase(math.atan2(z_y, z_x))


def estimate_phase(record: ShotRecord) -> float:
    """theta = arg(z_x + i z_y) with z = 2P - 1, full range (-pi, pi]."""
    return phase_from_populations(record.p_x, record.p_y)


def estimate_phases(p_x, p_y) -> np.ndarray:
    """Vectorised estimate_phase; undefined shots come back as NaN."""
    z_x = 2.0 * np.asarray(p_x, dtype=float) - 1.0
    z_y = 2.0 * np.asarray(p_y, dtype=float) - 1.0
    theta = wrap_phase(np.arctan2(z_y, z_x))
    return np.where((z_x == 0.0) & (z_y == 0.0), np.nan, theta)


def single_basis_phase(p_y):
    """arcsin inversion of one quadrature, only invertible on [-pi/2, pi/2]."""
    z = np.clip(2.0 * np.asarray(p_y, dtype=float) - 1.0, -1.0, 1.0)
    result = np.arcsin(z)
    return float(result) if np.ndim(result) == 0 else result


def phase_deviation(theta, theta_mean):
    """
    theta - theta_mean wrapped onto (-pi, pi].

    The dual-quadrature estimate spans the full circle, so deviations are
    wrapped with period 2 pi rather than pi.
    """
    theta = np.asarray(theta, dtype=float)
    theta_mean = np.asarray(theta_mean, dtype=float)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(theta_mean))):
        raise InvalidArgumentError("Phase deviation needs finite inputs")
    return wrap_phase(theta - theta_mean)
