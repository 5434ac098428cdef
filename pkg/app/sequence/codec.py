"""
Line-oriented text form of a PulseSequence.

    ARRAY <array_size>
    GLOBAL_PULSE <duration> angle=<rad> phase=<rad>
    LOCAL_SHIFT <shift_time> <site>=<nm> ...
    WAIT <duration>
    LOCAL_PI_FLIP <duration> mode=<ideal|composite> window=<us> sites=<i,j,...>
    MEASURE <duration> <site>=<X|Y|Z> ...

Durations are microseconds. Floats are written with repr() so a dump
loads back to an equal sequence. Blank lines and '#' comments are ignored.
"""
from typing import Dict, List

from app.sequence.instructions import GlobalPulse, LocalPiFlip, LocalShift, Measure, PulseSequence, Wait
from app.utils.errors import InvalidArgumentError


def _pairs(items: Dict) -> str:
    return " ".join(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}" for key, value in items.items())


def dumps(seq: PulseSequence) -> str:
    lines = [f"ARRAY {seq.array_size}"]
    for instruction in seq.instructions:
        if isinstance(instruction, GlobalPulse):
            body = f"{instruction.duration!r} angle={instruction.angle!r} phase={instruction.drive_phase!r}"
        elif isinstance(instruction, LocalShift):
            body = f"{instruction.shift_time!r} {_pairs(instruction.shifts)}"
        elif isinstance(instruction, Wait):
            body = f"{instruction.duration!r}"
        elif isinstance(instruction, LocalPiFlip):
            sites = ",".join(str(s) for s in instruction.sites)
            body = f"{instruction.duration!r} mode={instruction.mode} window={instruction.window!r} sites={sites}"
        else:
            body = f"{instruction.duration!r} {_pairs(instruction.bases)}"
        lines.append(f"{instruction.op} {body}".rstrip())
    return "\n".join(lines) + "\n"


def _fields(tokens: List[str], line_no: int) -> Dict[str, str]:
    fields = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep:
            raise InvalidArgumentError(f"line {line_no}: expected key=value, got {token!r}")
        fields[key] = value
    return fields


def loads(text: str) -> PulseSequence:
    array_size = None
    instructions = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        op, *rest = line.split()
        try:
            if op == "ARRAY":
                array_size = int(rest[0])
                continue
            duration = float(rest[0])
            fields = _fields(rest[1:], line_no)
            if op == "GLOBAL_PULSE":
                instructions.append(
                    GlobalPulse(angle=float(fields["angle"]), drive_phase=float(fields["phase"]), duration=duration)
                )
            elif op == "LOCAL_SHIFT":
                shifts = {int(k): float(v) for k, v in fields.items()}
                instructions.append(LocalShift(shifts=shifts, shift_time=duration))
            elif op == "WAIT":
                instructions.append(Wait(duration=duration))
            elif op == "LOCAL_PI_FLIP":
                sites = tuple(int(s) for s in fields["sites"].split(",") if s)
                instructions.append(
                    LocalPiFlip(sites=sites, mode=fields["mode"], window=float(fields["window"]), duration=duration)
                )
            elif op == "MEASURE":
                instructions.append(Measure(bases={int(k): v for k, v in fields.items()}, duration=duration))
            else:
                raise InvalidArgumentError(f"line {line_no}: unknown opcode {op!r}")
        except (IndexError, KeyError, ValueError) as e:
            if isinstance(e, InvalidArgumentError):
                raise
            raise InvalidArgumentError(f"line {line_no}: cannot parse {raw.strip()!r} ({e})") from e
    if array_size is None:
        raise InvalidArgumentError("Missing ARRAY header")
    return PulseSequence(array_size=array_size, instructions=instructions)
