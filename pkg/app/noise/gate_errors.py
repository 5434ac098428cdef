from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.config import defaults


class GateErrorParams(BaseModel):
    """
    Scalar error budget for global pulses and atom moves.

    depolarizing_pi is the depolarizing probability of one X(pi); a pulse of
    angle a gets depolarizing_pi * |a| / pi. Finite atom temperature is
    folded in here instead of simulating motion. depolarizing_shift hits
    every site that moves, once per move, whatever the distance.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    depolarizing_pi: float = Field(default=0.0, ge=0.0, le=1.0)
    depolarizing_shift: float = Field(default=0.0, ge=0.0, le=1.0)

    # Depolarizing p costs p/2 fidelity on a pure state
    @classmethod
    def thermal(cls) -> "GateErrorParams":
        return cls(depolarizing_pi=2.0 * defaults.TEMPERATURE_PI_INFIDELITY)

    @classmethod
    def reference(cls) -> "GateErrorParams":
        """Budget matching the quoted global X(pi) and shift fidelities, thermal part included."""
        return cls(
            depolarizing_pi=2.0 * (1.0 - defaults.GLOBAL_PI_FIDELITY),
            depolarizing_shift=2.0 * (1.0 - defaults.SHIFT_FIDELITY),
        )

    def probability(self, angle: float) -> float:
        return min(self.depolarizing_pi * abs(angle) / np.pi, 1.0)

    def apply(self, amp0: np.ndarray, amp1: np.ndarray, angle: float, rng: np.random.Generator):
        return _depolarize(amp0, amp1, self.probability(angle), rng)

    def apply_shift(self, amp0: np.ndarray, amp1: np.ndarray, moved: np.ndarray, rng: np.random.Generator):
        """Move error on the sites flagged in `moved` (broadcast over shots)."""
        return _depolarize(amp0, amp1, self.depolarizing_shift, rng, mask=moved)


def _depolarize(amp0: np.ndarray, amp1: np.ndarray, p: float, rng: np.random.Generator,
                mask: Optional[np.ndarray] = None):
    """
    Stochastic unravelling of the depolarizing channel: with probability
    3p/4 apply a uniformly chosen Pauli. Draws cover the whole array so the
    stream does not depend on which sites are masked.
    """
    if p == 0.0:
        return amp0, amp1
    hit = rng.random(amp0.shape) < 0.75 * p
    which = rng.integers(0, 3, size=amp0.shape)
    if mask is not None:
        hit &= np.broadcast_to(mask, amp0.shape)

    is_x = hit & (which == 0)
    is_y = hit & (which == 1)
    is_z = hit & (which == 2)
    new0 = np.where(is_x, amp1, np.where(is_y, -1j * amp1, amp0))
    new1 = np.where(is_x, amp0, np.where(is_y, 1j * amp0, np.where(is_z, -amp1, amp1)))
    return new0, new1
