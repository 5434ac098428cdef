from dataclasses import dataclass, field
from typing import Dict, List, Literal, Tuple

from app.utils.errors import InvalidArgumentError

Quadrature = Literal["X", "Y"]


@dataclass(frozen=True)
class EnsembleLayout:
    """Per-site ensemble index m and readout quadrature."""
    ensemble: Tuple[int, ...]
    quadrature: Tuple[Quadrature, ...]

    def __post_init__(self):
        if len(self.ensemble) != len(self.quadrature):
            raise InvalidArgumentError("Layout needs exactly one ensemble and one quadrature per site")
        if not self.ensemble:
            raise InvalidArgumentError("Layout is empty")
        if any(q not in ("X", "Y") for q in self.quadrature):
            raise InvalidArgumentError(f"Quadratures must be 'X' or 'Y', got {sorted(set(self.quadrature))}")
        if min(self.ensemble) < 0:
            raise InvalidArgumentError("Ensemble indices must be non-negative")
        for m in range(self.M):
            for q in ("X", "Y"):
                if not self.sites(m, q):
                    raise InvalidArgumentError(f"Ensemble {m} has no {q}-quadrature sites")

    @classmethod
    def alternating(cls, n_sites: int) -> "EnsembleLayout":
        """One ensemble, even sites read X and odd sites read Y."""
        if n_sites < 2:
            raise InvalidArgumentError("Dual-quadrature readout needs at least two sites")
        return cls(
            ensemble=tuple(0 for _ in range(n_sites)),
            quadrature=tuple("X" if i % 2 == 0 else "Y" for i in range(n_sites)),
        )

    @classmethod
    def blocks(cls, M: int, n_per_quadrature: int = 1) -> "EnsembleLayout":
        """M contiguous ensembles, alternating X/Y inside each block."""
        if M < 1 or n_per_quadrature < 1:
            raise InvalidArgumentError(f"Need M >= 1 and n_per_quadrature >= 1, got ({M}, {n_per_quadrature})")
        ensemble: List[int] = []
        quadrature: List[Quadrature] = []
        for m in range(M):
            for i in range(2 * n_per_quadrature):
                ensemble.append(m)
                quadrature.append("X" if i % 2 == 0 else "Y")
        return cls(ensemble=tuple(ensemble), quadrature=tuple(quadrature))

    @property
    def n_sites(self) -> int:
        return len(self.ensemble)

    @property
    def M(self) -> int:
        return max(self.ensemble) + 1

    def sites(self, m: int, quadrature: Quadrature) -> List[int]:
        return [i for i, (e, q) in enumerate(zip(self.ensemble, self.quadrature)) if e == m and q == quadrature]

    def ensemble_sites(self, m: int) -> List[int]:
        return [i for i, e in enumerate(self.ensemble) if e == m]

    def atoms_per_quadrature(self, m: int) -> Tuple[int, int]:
        return len(self.sites(m, "X")), len(self.sites(m, "Y"))

    def is_balanced(self, m: int) -> bool:
        n_x, n_y = self.atoms_per_quadrature(m)
        return n_x == n_y


@dataclass(frozen=True)
class SensitivitySchedule:
    """
    Flip timing of a multi-ensemble schedule; flip_times are fractions of
    the total dark time T = k * tau.
    """
    M: int
    k: int
    tau: float
    flip_times: Dict[int, Tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for m, times in self.flip_times.items():
            if any(not (0.0 < f < 1.0) for f in times):
                raise InvalidArgumentError(f"Ensemble {m}: flip times must lie strictly inside (0, T)")
            if list(times) != sorted(times):
                raise InvalidArgumentError(f"Ensemble {m}: flip times must be ascending")
        for m in range(self.M):
            expected = 2.0 ** (-m)
            if abs(self.fraction(m) - expected) > 1e-9:
                raise InvalidArgumentError(
                    f"Ensemble {m} nets phase fraction {self.fraction(m)}, expected {expected}"
                )

    @property
    def total_time(self) -> float:
        return self.k * self.tau

    def fraction(self, m: int) -> float:
        return signed_fraction(self.flip_times.get(m, ()))


def signed_fraction(flip_fractions) -> float:
    """
    Integral of s(t) over [0, 1] with s = +1 on the last segment and a sign
    change at every flip.
    """
    edges = [0.0] + list(flip_fractions) + [1.0]
    n_segments = len(edges) - 1
    total = 0.0
    for i in range(n_segments):
        sign = 1.0 if (n_segments - 1 - i) % 2 == 0 else -1.0
        total += sign * (edges[i + 1] - edges[i])
    return total
