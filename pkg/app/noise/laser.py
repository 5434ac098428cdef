from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.utils.errors import InvalidArgumentError
from app.utils.logger import setup_logger
from app.utils.rng import as_rng

logger = setup_logger(__name__)

NoiseKind = Literal[
    "none",
    "shot-to-shot-frequency",
    "random-walk-phase",
    "power-law-sigma",
    "ou-frequency",
]

# OU paths are integrated on a grid no coarser than correlation_time / 20
_OU_STEPS_PER_CORRELATION_TIME = 20


class LaserNoiseParams(BaseModel):
    """
    Generative model of the clock-laser phase theta(t), time in fit units.

    beta is the kind's amplitude: frequency spread (shot-to-shot, OU),
    phase diffusion (random walk) or the prefactor of sigma(t) = beta t^alpha.
    detuning adds a deterministic theta = detuning * t to every path.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: NoiseKind = "power-law-sigma"
    beta: float = Field(default=0.0, ge=0.0)
    alpha: float = Field(default=0.59, gt=0.0, le=1.5)
    correlation_time: Optional[float] = Field(default=None, gt=0.0)
    detuning: float = 0.0

    @model_validator(mode="after")
    def _check_correlation_time(self):
        if self.kind == "ou-frequency" and self.correlation_time is None:
            raise ValueError("ou-frequency noise needs a correlation_time")
        return self

    @property
    def is_silent(self) -> bool:
        return (self.kind == "none" or self.beta == 0.0) and self.detuning == 0.0

    def sigma(self, t) -> np.ndarray:
        """Ensemble standard deviation of theta(t) implied by the model."""
        t = np.asarray(t, dtype=float)
        if self.kind == "none" or self.beta == 0.0:
            return np.zeros_like(t)
        if self.kind == "shot-to-shot-frequency":
            return self.beta * t
        if self.kind == "random-walk-phase":
            return self.beta * np.sqrt(t)
        if self.kind == "power-law-sigma":
            return self.beta * t ** self.alpha
        tc = self.correlation_time
        variance = 2.0 * self.beta ** 2 * tc ** 2 * (t / tc - 1.0 + np.exp(-t / tc))
        return np.sqrt(np.maximum(variance, 0.0))


@dataclass(frozen=True)
class NoiseTrajectory:
    t_grid: np.ndarray
    # shape (n_paths, len(t_grid)); phases[:, 0] == 0
    phases: np.ndarray
    seed: Optional[int] = None

    @property
    def n_paths(self) -> int:
        return self.phases.shape[0]

    def at(self, times) -> np.ndarray:
        """Linear interpolation of every path, shape (n_paths, len(times))."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.t_grid.size == 1:
            return np.repeat(self.phases[:, :1], times.size, axis=1)
        idx = np.clip(np.searchsorted(self.t_grid, times, side="right") - 1, 0, self.t_grid.size - 2)
        t0 = self.t_grid[idx]
        t1 = self.t_grid[idx + 1]
        w = np.clip((times - t0) / (t1 - t0), 0.0, 1.0)
        return self.phases[:, idx] * (1.0 - w) + self.phases[:, idx + 1] * w


def _check_grid(t_grid: np.ndarray) -> None:
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise InvalidArgumentError("t_grid must be a non-empty 1-D sequence")
    if t_grid[0] != 0.0:
        raise InvalidArgumentError(f"t_grid must start at 0, got {t_grid[0]}")
    if np.any(np.diff(t_grid) <= 0.0):
        raise InvalidArgumentError("t_grid must be strictly ascending")


def _wiener_on_clock(clock: np.ndarray, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """W(clock) for a non-decreasing clock starting at 0."""
    steps = np.sqrt(np.diff(clock))
    increments = rng.standard_normal((n_paths, steps.size)) * steps
    return np.concatenate([np.zeros((n_paths, 1)), np.cumsum(increments, axis=1)], axis=1)


def _ou_phase(params: LaserNoiseParams, t_grid: np.ndarray, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    tc = params.correlation_time
    max_step = tc / _OU_STEPS_PER_CORRELATION_TIME
    fine = [t_grid[:1]]
    for a, b in zip(t_grid[:-1], t_grid[1:]):
        n_sub = max(int(np.ceil((b - a) / max_step)), 1)
        fine.append(np.linspace(a, b, n_sub + 1)[1:])
    fine_grid = np.concatenate(fine)
    dt = np.diff(fine_grid)

    rho = np.exp(-dt / tc)
    kicks = rng.standard_normal((n_paths, dt.size)) * params.beta * np.sqrt(1.0 - rho ** 2)
    freq = np.empty((n_paths, fine_grid.size))
    freq[:, 0] = rng.standard_normal(n_paths) * params.beta
    for i in range(dt.size):
        freq[:, i + 1] = freq[:, i] * rho[i] + kicks[:, i]

    # Trapezoid integration of the frequency
    phase = np.concatenate(
        [np.zeros((n_paths, 1)), np.cumsum(0.5 * (freq[:, 1:] + freq[:, :-1]) * dt, axis=1)], axis=1
    )
    keep = np.searchsorted(fine_grid, t_grid)
    return phase[:, keep]


def sample_trajectory(params: LaserNoiseParams, t_grid, seed, n_paths: int = 1) -> NoiseTrajectory:
    """
    Draw n_paths laser phase trajectories on t_grid (fit units, starting at 0).

    power-law-sigma is a time-changed Wiener process theta = beta W(t^(2 alpha)):
    its marginal spread is exactly beta t^alpha and paths stay continuous.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    _check_grid(t_grid)
    if n_paths < 1:
        raise InvalidArgumentError(f"n_paths must be >= 1, got {n_paths}")
    rng = as_rng(seed)

    if params.kind == "none" or params.beta == 0.0:
        phases = np.zeros((n_paths, t_grid.size))
    elif params.kind == "shot-to-shot-frequency":
        offsets = rng.standard_normal(n_paths) * params.beta
        phases = offsets[:, None] * t_grid[None, :]
    elif params.kind == "random-walk-phase":
        phases = params.beta * _wiener_on_clock(t_grid, n_paths, rng)
    elif params.kind == "power-law-sigma":
        phases = params.beta * _wiener_on_clock(t_grid ** (2.0 * params.alpha), n_paths, rng)
    else:
        phases = _ou_phase(params, t_grid, n_paths, rng)

    if params.detuning != 0.0:
        phases = phases + params.detuning * t_grid[None, :]

    seed_value = seed if isinstance(seed, (int, np.integer)) else None
    return NoiseTrajectory(t_grid=t_grid, phases=phases, seed=seed_value)
