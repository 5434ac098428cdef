import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from app.utils.errors import InvalidArgumentError


@dataclass(frozen=True)
class ShotRecord:
    """Excited fractions of the two quadrature sub-ensembles in one shot."""
    t: float
    p_x: float
    p_y: float
    n_x: int
    n_y: int

    def __post_init__(self):
        for name, p, n in (("p_x", self.p_x, self.n_x), ("p_y", self.p_y, self.n_y)):
            if n < 1:
                raise InvalidArgumentError(f"{name}: atom count must be >= 1, got {n}")
            if not (0.0 <= p <= 1.0):
                raise InvalidArgumentError(f"{name} must lie in [0, 1], got {p}")
            if abs(p * n - round(p * n)) > 1e-9:
                raise InvalidArgumentError(f"{name}={p} is not a fraction of {n} atoms")

    @classmethod
    def from_counts(cls, t: float, k_x: int, n_x: int, k_y: int, n_y: int) -> "ShotRecord":
        return cls(t=t, p_x=k_x / n_x, p_y=k_y / n_y, n_x=n_x, n_y=n_y)

    @property
    def z_x(self) -> float:
        return 2.0 * self.p_x - 1.0

    @property
    def z_y(self) -> float:
        return 2.0 * self.p_y - 1.0


@dataclass(frozen=True)
class DynamicRange:
    """Half-width B of the invertible phase interval."""
    B: float

    def __post_init__(self):
        if not (self.B > 0.0 and math.isfinite(self.B)):
            raise InvalidArgumentError(f"Dynamic range half-width must be positive, got {self.B}")


SINGLE_QUADRATURE = DynamicRange(math.pi / 2)
DUAL_QUADRATURE = DynamicRange(math.pi)

RangeLike = Union[DynamicRange, float]


def half_range(B: RangeLike) -> float:
    return B.B if isinstance(B, DynamicRange) else DynamicRange(float(B)).B


@dataclass(frozen=True)
class PhaseFit:
    """sigma(t)^2 = (beta t^alpha)^2 + sigma_qpn^2 with sigma_qpn held fixed."""
    beta: float
    alpha: float
    sigma_qpn: float
    covariance: np.ndarray = field(default_factory=lambda: np.full((2, 2), np.nan))
    alpha_identifiable: bool = True
    residual_rms: float = 0.0

    def __post_init__(self):
        if self.beta < 0.0 or self.alpha <= 0.0 or self.sigma_qpn < 0.0:
            raise InvalidArgumentError(
                f"Invalid PhaseFit (beta={self.beta}, alpha={self.alpha}, sigma_qpn={self.sigma_qpn})"
            )

    @property
    def beta_stderr(self) -> float:
        return float(np.sqrt(self.covariance[0, 0]))

    @property
    def alpha_stderr(self) -> float:
        return float(np.sqrt(self.covariance[1, 1]))

    def sigma_laser(self, t) -> np.ndarray:
        return self.beta * np.asarray(t, dtype=float) ** self.alpha

    def sigma_total(self, t) -> np.ndarray:
        return np.sqrt(self.sigma_laser(t) ** 2 + self.sigma_qpn ** 2)

    def as_dict(self, label: Optional[str] = None) -> dict:
        prefix = f"{label}_" if label else ""
        return {
            f"{prefix}beta": self.beta,
            f"{prefix}beta_stderr": self.beta_stderr,
            f"{prefix}alpha": self.alpha,
            f"{prefix}alpha_stderr": self.alpha_stderr,
            f"{prefix}sigma_qpn": self.sigma_qpn,
            f"{prefix}alpha_identifiable": self.alpha_identifiable,
            f"{prefix}residual_rms": self.residual_rms,
        }
