import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.config.settings import settings
from app.utils.errors import InvalidArgumentError

NORM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class QubitState:
    """
    Pure two-level state a0|0> + a1|1>, |0> ground and |1> excited.

    Amplitudes are stored directly so relative phases stay exact over long
    sequences; the global phase carries no meaning.
    """
    amp0: complex
    amp1: complex

    def __post_init__(self):
        norm = abs(self.amp0) ** 2 + abs(self.amp1) ** 2
        if not math.isfinite(norm) or abs(norm - 1.0) > NORM_TOLERANCE:
            raise InvalidArgumentError(f"QubitState must be normalised, |a0|^2+|a1|^2 = {norm!r}")

    @classmethod
    def ground(cls) -> "QubitState":
        return cls(1.0 + 0j, 0j)

    @classmethod
    def excited(cls) -> "QubitState":
        return cls(0j, 1.0 + 0j)

    @classmethod
    def from_amplitudes(cls, amp0: complex, amp1: complex) -> "QubitState":
        norm = math.sqrt(abs(amp0) ** 2 + abs(amp1) ** 2)
        if norm == 0.0 or not math.isfinite(norm):
            raise InvalidArgumentError("Cannot normalise a zero or non-finite amplitude pair")
        return cls(complex(amp0) / norm, complex(amp1) / norm)

    @property
    def excited_population(self) -> float:
        return abs(self.amp1) ** 2

    @property
    def ground_population(self) -> float:
        return abs(self.amp0) ** 2

    def as_vector(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)

    def density_matrix(self) -> np.ndarray:
        v = self.as_vector()
        return np.outer(v, v.conj())


@dataclass(frozen=True)
class SitePosition:
    site_index: int
    x: float  # nm along the beam axis

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise InvalidArgumentError(f"Site {self.site_index} position must be finite")


class DriveParams(BaseModel):
    """Global clock-laser drive."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    wavelength_nm: float = Field(default=settings.WAVELENGTH_NM, gt=0)
    rabi_frequency_hz: float = Field(default=settings.RABI_FREQUENCY_HZ, gt=0)
    # Relative error of the tweezer distance calibration
    distance_scale_error: float = Field(default=0.0, gt=-1.0)

    @property
    def wavevector(self) -> float:
        """k = 2*pi/lambda in rad/nm."""
        return 2.0 * math.pi / self.wavelength_nm

    def pulse_duration_us(self, angle: float) -> float:
        # |Omega| is quoted as a cyclic frequency
        return abs(angle) / (2.0 * math.pi * self.rabi_frequency_hz) * 1e6


def check_positions(positions) -> None:
    seen = set()
    for position in positions:
        if position.site_index in seen:
            raise InvalidArgumentError(f"Duplicate site index {position.site_index}")
        seen.add(position.site_index)
