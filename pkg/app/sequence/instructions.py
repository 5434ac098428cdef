from typing import Dict, List, Literal, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field
from typing_extensions import Annotated

Basis = Literal["X", "Y", "Z"]
FlipMode = Literal["ideal", "composite"]


class _Instruction(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    # Time on the laser-phase clock; pulses are instantaneous there
    @property
    def dark_duration(self) -> float:
        return 0.0


class GlobalPulse(_Instruction):
    op: Literal["GLOBAL_PULSE"] = "GLOBAL_PULSE"
    angle: float
    drive_phase: float = 0.0
    duration: float = Field(default=0.0, ge=0.0)


class LocalShift(_Instruction):
    """Parallel moves along the beam axis, site -> displacement in nm."""
    op: Literal["LOCAL_SHIFT"] = "LOCAL_SHIFT"
    shifts: Dict[int, float]
    shift_time: float = Field(ge=0.0)

    @property
    def duration(self) -> float:
        return self.shift_time

    @property
    def dark_duration(self) -> float:
        return self.shift_time


class Wait(_Instruction):
    op: Literal["WAIT"] = "WAIT"
    duration: float = Field(ge=0.0)

    @property
    def dark_duration(self) -> float:
        return self.duration


class LocalPiFlip(_Instruction):
    """
    X(pi) on `sites` only.

    ideal: an instantaneous flip. composite: X(pi/2), Z(pi) frame shift on
    every other site, X(pi/2), shift back; each shift occupies `window` of
    dark time, so the flip acts half a window after it starts.
    """
    op: Literal["LOCAL_PI_FLIP"] = "LOCAL_PI_FLIP"
    sites: Tuple[int, ...]
    mode: FlipMode = "ideal"
    window: float = Field(default=0.0, ge=0.0)
    duration: float = Field(default=0.0, ge=0.0)

    @property
    def dark_duration(self) -> float:
        return 2.0 * self.window if self.mode == "composite" else 0.0

    @property
    def flip_offset(self) -> float:
        return 0.5 * self.window if self.mode == "composite" else 0.0


class Measure(_Instruction):
    op: Literal["MEASURE"] = "MEASURE"
    bases: Dict[int, Basis]
    duration: float = Field(default=0.0, ge=0.0)


Instruction = Annotated[
    Union[GlobalPulse, LocalShift, Wait, LocalPiFlip, Measure],
    Field(discriminator="op"),
]


class PulseSequence(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    array_size: int = Field(ge=1)
    instructions: List[Instruction] = Field(default_factory=list)

    @property
    def total_time(self) -> float:
        return float(sum(instruction.duration for instruction in self.instructions))

    @property
    def dark_time(self) -> float:
        return float(sum(instruction.dark_duration for instruction in self.instructions))

    @property
    def sites(self) -> range:
        return range(self.array_size)

    def with_instructions(self, extra: List[_Instruction]) -> "PulseSequence":
        return PulseSequence(array_size=self.array_size, instructions=list(self.instructions) + list(extra))

    def with_measurement(self, basis: Basis = "Z") -> "PulseSequence":
        body = [i for i in self.instructions if not isinstance(i, Measure)]
        measure = Measure(bases={site: basis for site in self.sites})
        return PulseSequence(array_size=self.array_size, instructions=body + [measure])

    @property
    def measurement(self) -> Dict[int, Basis]:
        bases: Dict[int, Basis] = {}
        for instruction in self.instructions:
            if isinstance(instruction, Measure):
                bases.update(instruction.bases)
        return bases
