from typing import List, Tuple

import numpy as np
import pandas as pd

from app.ensembles.unwrap import EnsembleEstimate
from app.estimation.phase import estimate_phases
from app.sequence.layout import EnsembleLayout
from app.simulation.simulator import ShotOutcomes
from app.utils.logger import setup_logger

logger = setup_logger(__name__)


def quadrature_fractions(outcomes: ShotOutcomes, layout: EnsembleLayout, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-shot excited fractions (P_x, P_y) of ensemble m."""
    return outcomes.fraction(layout.sites(m, "X")), outcomes.fraction(layout.sites(m, "Y"))


def ensemble_phases(outcomes: ShotOutcomes, layout: EnsembleLayout) -> np.ndarray:
    """
    Dual-quadrature phase of every ensemble in every shot, shape (n_shots, M),
    NaN where a shot's quadrature vector is zero.
    """
    phases = np.empty((outcomes.n_shots, layout.M))
    for m in range(layout.M):
        p_x, p_y = quadrature_fractions(outcomes, layout, m)
        phases[:, m] = estimate_phases(p_x, p_y)
        if not layout.is_balanced(m):
            logger.warning(f"Ensemble {m} is unbalanced: {layout.atoms_per_quadrature(m)} atoms in (X, Y)")
    return phases


def estimates_for_shot(phases: np.ndarray, layout: EnsembleLayout, shot: int) -> List[EnsembleEstimate]:
    """One shot's readings ordered slow to fast, ready for cascaded_unwrap."""
    estimates = []
    for m in range(layout.M - 1, -1, -1):
        n_x, n_y = layout.atoms_per_quadrature(m)
        estimates.append(EnsembleEstimate.for_ensemble(m, float(phases[shot, m]), n_x, n_y))
    return estimates


def shot_table(outcomes: ShotOutcomes, layout: EnsembleLayout, t: float) -> pd.DataFrame:
    """Long-format rows (t, shot, site, ensemble, quadrature, outcome)."""
    n_shots, n_sites = outcomes.outcomes.shape
    return pd.DataFrame({
        "t": np.full(n_shots * n_sites, float(t)),
        "shot": np.repeat(np.arange(n_shots), n_sites),
        "site": np.tile(np.arange(n_sites), n_shots),
        "ensemble": np.tile(np.asarray(layout.ensemble), n_shots),
        "quadrature": np.tile(np.asarray(layout.quadrature), n_shots),
        "outcome": outcomes.outcomes.astype(int).ravel(),
    })
