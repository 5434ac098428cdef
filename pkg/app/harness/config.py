import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.config import defaults
from app.config.settings import settings
from app.noise.gate_errors import GateErrorParams
from app.noise.laser import LaserNoiseParams
from app.noise.spam import SpamParams
from app.qubit.state import DriveParams
from app.sequence.builders import SequenceOptions
from app.sequence.instructions import FlipMode
from app.utils.errors import ConfigValidationError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

ExperimentKind = Literal[
    "parity-sweep",
    "phase-pattern",
    "cardinal-tomography",
    "dual-quadrature",
    "local-dd",
    "kernel-schedule",
    "multi-ensemble-slip",
    "shift-fidelity",
]

# Sections a kind cannot run without
REQUIRED_SECTIONS: Dict[str, List[str]] = {
    "parity-sweep": ["sweep"],
    "phase-pattern": ["time"],
    "cardinal-tomography": [],
    "dual-quadrature": ["time", "noise"],
    "local-dd": ["time", "noise"],
    "kernel-schedule": ["time", "noise"],
    "multi-ensemble-slip": ["slip"],
    "shift-fidelity": [],
}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ArraySection(_Section):
    n_sites: int = Field(default=39, ge=2)
    ensembles: int = Field(default=1, ge=1)
    atoms_per_quadrature: int = Field(default=10, ge=1)


class Grid(_Section):
    """Linear grid, or explicit values when given."""
    start: float = 0.0
    stop: float = 1.0
    points: int = Field(default=50, ge=1)
    values: Optional[List[float]] = None

    def as_array(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return np.linspace(self.start, self.stop, self.points)


class SequenceSection(_Section):
    shift_time_us: float = Field(default=settings.SHIFT_TIME_US, ge=0.0)
    jitter_pad_us: float = Field(default=settings.JITTER_PAD_US, ge=0.0)
    pad_per_shift: bool = True
    flip_mode: FlipMode = "ideal"
    kernels: int = Field(default=1, ge=1)
    pattern: Optional[List[float]] = None
    shift_times_us: List[float] = Field(default_factory=lambda: [20.0, 32.0, 50.0, 100.0])


class AnalysisSection(_Section):
    epsilon: List[float] = Field(default_factory=lambda: [float(e) for e in np.logspace(-4, -0.5, 15)])
    fold_method: Literal["mle", "histogram"] = "mle"
    pooling: Literal["joint", "per-ensemble"] = "joint"
    sigma_qpn: Optional[float] = Field(default=None, ge=0.0)
    histogram_bins: int = Field(default=40, ge=4)
    single_basis: bool = True


class SlipSection(_Section):
    sigma_full: List[float] = Field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])
    M_values: List[int] = Field(default_factory=lambda: [1, 2, 3])
    trials: int = Field(default=100_000, ge=1)
    per_stage_sigma: Optional[List[float]] = None
    n_atoms: Optional[int] = Field(default=None, ge=1)


class ExperimentConfig(_Section):
    kind: ExperimentKind
    seed: int = Field(ge=0)
    shots: int = Field(default=200, ge=1)
    output_dir: Optional[str] = None

    array: ArraySection = Field(default_factory=ArraySection)
    drive: DriveParams = Field(default_factory=DriveParams)
    noise: Optional[LaserNoiseParams] = None
    spam: Optional[SpamParams] = None
    gate_errors: GateErrorParams = Field(default_factory=GateErrorParams)
    # Interrogation times in fit units (ms)
    time: Optional[Grid] = None
    # Displacements in nm
    sweep: Optional[Grid] = None
    sequence: SequenceSection = Field(default_factory=SequenceSection)
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)
    slip: Optional[SlipSection] = None

    @property
    def noise_or_silent(self) -> LaserNoiseParams:
        return self.noise if self.noise is not None else LaserNoiseParams(kind="none")

    @property
    def spam_or_perfect(self) -> SpamParams:
        return self.spam if self.spam is not None else SpamParams.perfect()

    def sequence_options(self, **overrides) -> SequenceOptions:
        options = SequenceOptions(
            drive=self.drive,
            shift_time_us=self.sequence.shift_time_us,
            jitter_pad_us=self.sequence.jitter_pad_us,
            pad_per_shift=self.sequence.pad_per_shift,
            flip_mode=self.sequence.flip_mode,
        )
        return options.model_copy(update=overrides) if overrides else options

    def output_path(self) -> str:
        return self.output_dir or settings.OUTPUT_DIR


def _format_error(error: Dict[str, Any]) -> str:
    location = ".".join(str(part) for part in error.get("loc", ())) or "<root>"
    return f"{location}: {error.get('msg', 'invalid')}"


def validate_config(data: Dict[str, Any]) -> ExperimentConfig:
    """Validate a raw mapping, collecting every problem before raising."""
    errors: List[str] = []
    config = None
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        errors.extend(_format_error(err) for err in e.errors())

    kind = data.get("kind") if isinstance(data, dict) else None
    for section in REQUIRED_SECTIONS.get(kind, []):
        if section not in data:
            errors.append(f"{section}: section required for kind '{kind}'")
    if config is not None:
        errors.extend(_semantic_errors(config))

    if errors:
        raise ConfigValidationError(errors)
    return config


def _semantic_errors(config: ExperimentConfig) -> List[str]:
    errors = []
    if config.time is not None:
        times = config.time.as_array()
        if times.size == 0 or np.any(times < 0.0) or not np.all(np.isfinite(times)):
            errors.append("time: grid values must be finite and >= 0")
        if config.kind in ("dual-quadrature", "local-dd", "kernel-schedule") and np.any(times <= 0.0):
            errors.append(f"time: kind '{config.kind}' needs strictly positive times")
    if config.kind == "local-dd" and config.array.ensembles not in (1, 3):
        errors.append("array.ensembles: local-dd always uses three ensembles")
    if config.kind == "kernel-schedule" and config.array.ensembles < 2:
        errors.append("array.ensembles: kernel-schedule needs at least two ensembles")
    if config.slip is not None:
        if any(m < 1 for m in config.slip.M_values):
            errors.append("slip.M_values: every M must be >= 1")
        if any(s < 0.0 or not math.isfinite(s) for s in config.slip.sigma_full):
            errors.append("slip.sigma_full: values must be finite and >= 0")
    if config.analysis.epsilon and any(not (0.0 < e < 1.0) for e in config.analysis.epsilon):
        errors.append("analysis.epsilon: values must lie in (0, 1)")
    return errors


def load_config(path: str) -> ExperimentConfig:
    """Load a TOML config, or the config.json echo of an earlier run."""
    try:
        if path.endswith(".json"):
            with open(path) as f:
                data = json.load(f)
        else:
            with open(path, "rb") as f:
                data = tomllib.load(f)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigValidationError([f"{path}: {e}"]) from e
    except OSError as e:
        raise ConfigValidationError([f"{path}: cannot read config ({e.strerror})"]) from e
    if not isinstance(data, dict):
        raise ConfigValidationError([f"{path}: config must be a table"])
    config = validate_config(data)
    logger.info(f"Loaded {config.kind} config from {path} (seed={config.seed})")
    return config


def paper_noise() -> LaserNoiseParams:
    """Power-law laser noise with the published fit values."""
    return LaserNoiseParams(kind="power-law-sigma", beta=defaults.PAPER_BETA, alpha=defaults.PAPER_ALPHA)
