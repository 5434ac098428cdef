import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from app.config.settings import settings
from app.sequence.instructions import GlobalPulse, LocalPiFlip, LocalShift, Measure, PulseSequence
from app.utils.errors import SequenceAnalysisError

_ANGLE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Violation:
    index: int
    kind: str
    message: str


def dark_clock(seq: PulseSequence) -> List[float]:
    """Dark-clock time at the start of every instruction."""
    clock = 0.0
    starts = []
    for instruction in seq.instructions:
        starts.append(clock)
        clock += instruction.dark_duration
    return starts


def _check_skeleton(seq: PulseSequence) -> None:
    body = [i for i in seq.instructions if not isinstance(i, Measure)]
    pulses = [i for i, instruction in enumerate(body) if isinstance(instruction, GlobalPulse)]
    if len(pulses) != 2:
        raise SequenceAnalysisError(f"Expected a Ramsey skeleton with two global pulses, found {len(pulses)}")
    first, last = pulses
    if first != 0 or last != len(body) - 1:
        raise SequenceAnalysisError("Ramsey pulses must open and close the sequence")
    for index in pulses:
        if abs(abs(body[index].angle) - math.pi / 2) > _ANGLE_TOLERANCE:
            raise SequenceAnalysisError(f"Instruction {index} is not a pi/2 pulse (angle={body[index].angle})")


def flip_schedule(seq: PulseSequence, site: int) -> Tuple[List[float], float]:
    """Flip times of `site` on the dark clock, and the total dark time."""
    if not 0 <= site < seq.array_size:
        raise SequenceAnalysisError(f"Site {site} outside array of {seq.array_size}")
    _check_skeleton(seq)
    flips = []
    for start, instruction in zip(dark_clock(seq), seq.instructions):
        if isinstance(instruction, LocalPiFlip) and site in instruction.sites:
            flips.append(start + instruction.flip_offset)
    return flips, seq.dark_time


def _segments(flips: List[float], total: float) -> List[Tuple[float, float, float]]:
    """(start, end, sign) with sign +1 on the last segment."""
    edges = [0.0] + flips + [total]
    n = len(edges) - 1
    return [(edges[i], edges[i + 1], 1.0 if (n - 1 - i) % 2 == 0 else -1.0) for i in range(n)]


def effective_phase_fraction(seq: PulseSequence, site: int) -> float:
    """Share of the laser phase the site reports, from flip timing alone."""
    flips, total = flip_schedule(seq, site)
    if total <= 0.0:
        raise SequenceAnalysisError("Sequence has no dark time")
    return sum(sign * (b - a) for a, b, sign in _segments(flips, total)) / total


def accumulated_phase(seq: PulseSequence, site: int, phase_fn: Callable[[np.ndarray], np.ndarray]) -> float:
    """
    Net laser phase the site reports for an arbitrary trajectory theta(t):
    sum over segments of s * (theta(end) - theta(start)). Times are dark-clock
    microseconds.
    """
    flips, total = flip_schedule(seq, site)
    net = 0.0
    for a, b, sign in _segments(flips, total):
        theta = np.asarray(phase_fn(np.array([a, b])), dtype=float)
        net += sign * float(theta[1] - theta[0])
    return net


def validate(seq: PulseSequence, min_shift_time: Optional[float] = None) -> List[Violation]:
    min_shift = settings.MIN_SHIFT_TIME_US if min_shift_time is None else min_shift_time
    violations: List[Violation] = []
    measured = False

    def out_of_range(index: int, sites) -> None:
        bad = sorted(s for s in sites if not 0 <= s < seq.array_size)
        if bad:
            violations.append(Violation(index, "site-bounds", f"sites {bad} outside array of {seq.array_size}"))

    for index, instruction in enumerate(seq.instructions):
        if isinstance(instruction, Measure):
            measured = True
            out_of_range(index, instruction.bases.keys())
            continue
        if measured:
            violations.append(
                Violation(index, "measure-order", f"{instruction.op} follows a Measure; Measure must come last")
            )
        if isinstance(instruction, LocalShift):
            out_of_range(index, instruction.shifts.keys())
            if instruction.shift_time < min_shift:
                violations.append(
                    Violation(
                        index,
                        "shift-time",
                        f"shift_time {instruction.shift_time} us below the {min_shift} us minimum",
                    )
                )
        elif isinstance(instruction, LocalPiFlip):
            out_of_range(index, instruction.sites)
    return violations
