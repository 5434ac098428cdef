import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.config import defaults
from app.utils.errors import InvalidArgumentError
from app.utils.rng import as_rng


class SpamParams(BaseModel):
    """
    Measurement error channel, applied in the order of the readout:
    survival during imaging, ejection of ground-state atoms, detection.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    survival: float = Field(default=defaults.SURVIVAL, ge=0.0, le=1.0)
    detect: float = Field(default=defaults.DETECTION, ge=0.0, le=1.0)
    eject: float = Field(default=defaults.EJECTION, ge=0.0, le=1.0)
    readout_pulse_fidelity: float = Field(default=defaults.READOUT_PULSE_FIDELITY, ge=0.0, le=1.0)

    @classmethod
    def perfect(cls) -> "SpamParams":
        return cls(survival=1.0, detect=1.0, eject=1.0, readout_pulse_fidelity=1.0)

    @property
    def is_perfect(self) -> bool:
        return self.survival == self.detect == self.eject == self.readout_pulse_fidelity == 1.0

    @property
    def p_read_excited_given_excited(self) -> float:
        return self.survival * self.detect

    @property
    def p_read_excited_given_ground(self) -> float:
        return self.survival * (1.0 - self.eject) * self.detect

    def readout_matrix(self) -> np.ndarray:
        """Column-stochastic map (P(read g), P(read e)) <- (true g, true e)."""
        a = self.p_read_excited_given_excited
        b = self.p_read_excited_given_ground
        return np.array([[1.0 - b, 1.0 - a], [b, a]])

    def measured_fraction(self, p_ideal, rotated_basis: bool = False):
        p = np.asarray(p_ideal, dtype=float)
        if rotated_basis:
            flip = 1.0 - self.readout_pulse_fidelity
            p = p * (1.0 - flip) + (1.0 - p) * flip
        a = self.p_read_excited_given_excited
        b = self.p_read_excited_given_ground
        return b + (a - b) * p

    def correct(self, p_measured, rotated_basis: bool = False):
        """Invert measured_fraction, clipped to [0, 1]."""
        a = self.p_read_excited_given_excited
        b = self.p_read_excited_given_ground
        if a <= b:
            raise InvalidArgumentError("Readout channel is not invertible (no contrast left)")
        p = (np.asarray(p_measured, dtype=float) - b) / (a - b)
        if rotated_basis:
            flip = 1.0 - self.readout_pulse_fidelity
            if flip >= 0.5:
                raise InvalidArgumentError("Readout pulse fidelity must exceed 0.5 to correct")
            p = (p - flip) / (1.0 - 2.0 * flip)
        return np.clip(p, 0.0, 1.0)

    def sample(self, true_excited: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Pass true projective outcomes through the channel (vectorised)."""
        true_excited = np.asarray(true_excited, dtype=bool)
        survived = rng.random(true_excited.shape) < self.survival
        not_ejected = rng.random(true_excited.shape) >= self.eject
        detected = rng.random(true_excited.shape) < self.detect
        present = survived & (true_excited | not_ejected)
        return present & detected


def apply_spam(p_ideal: float, spam: SpamParams, rng) -> bool:
    """Sample one projective outcome with excited probability p_ideal and return the read-out bit."""
    if not (0.0 <= p_ideal <= 1.0):
        raise InvalidArgumentError(f"p_ideal must lie in [0, 1], got {p_ideal}")
    rng = as_rng(rng)
    true_excited = np.array(rng.random() < p_ideal)
    return bool(spam.sample(true_excited, rng))
