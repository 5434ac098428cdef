"""
Plot-ready delimited text, one file per figure panel. Nothing is rendered.

Every file except the deviation histograms has the columns

    <x axis>, series, quantity, mean, stderr, n

Histograms (fig3d) are written as t, series, bin_low, bin_high, density, count.
"""
import os
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from app.utils.errors import InvalidArgumentError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class Panel:
    experiment: str
    quantities: Tuple[str, ...]
    x_name: str
    description: str


PANELS: Dict[str, Panel] = {
    "fig1d": Panel("parity-sweep", ("population",), "delta_x_nm", "shifted and static populations vs displacement"),
    "fig1f": Panel("shift-fidelity", ("shift_fidelity",), "shift_time_us", "shift fidelity vs shift time"),
    "fig1e": Panel("shift-fidelity", ("population",), "delta_x_nm", "populations around a full-wavelength move"),
    "fig2b": Panel("phase-pattern", ("population",), "t", "per-site Ramsey fringes under a phase pattern"),
    "fig2c": Panel("cardinal-tomography", ("fidelity", "fidelity_spam_corrected"), "state",
                   "cardinal-state fidelities"),
    "fig3c": Panel("dual-quadrature", ("population",), "t", "X and Y quadrature fringes"),
    "fig3d": Panel("dual-quadrature", ("deviation_hist",), "t", "per-time phase deviation histograms"),
    "sigma": Panel("dual-quadrature", ("sigma_total", "sigma_laser"), "t", "phase spread vs time"),
    "fig3e": Panel("dual-quadrature", ("slip_probability",), "t", "phase-slip probability vs time"),
    "fig3f": Panel("dual-quadrature", ("t_max",), "epsilon", "maximum interrogation time vs slip probability"),
    "fig4b": Panel("local-dd", ("population",), "t", "per-ensemble fringes under local decoupling"),
    "fig4c": Panel("kernel-schedule", ("population",), "t", "per-ensemble fringes under kernel schedules"),
    "slip": Panel("multi-ensemble-slip", ("slip_probability", "slip_ci_low", "slip_ci_high", "slip_closed_form"),
                  "sigma_full", "slip probability of cascaded unwrapping"),
}


def _select(table: pd.DataFrame, panel: Panel) -> pd.DataFrame:
    rows = table[(table["experiment"] == panel.experiment) & table["quantity"].isin(panel.quantities)]
    if rows.empty:
        raise InvalidArgumentError(
            f"No {'/'.join(panel.quantities)} rows from a {panel.experiment} run in this table"
        )
    return rows


def _histogram_frame(rows: pd.DataFrame) -> pd.DataFrame:
    parts = rows["group"].str.rsplit(",t=", n=1, expand=True)
    frame = pd.DataFrame({
        "t": parts[1].astype(float).to_numpy(),
        "series": parts[0].to_numpy(),
        "center": rows["x"].to_numpy(),
        "density": rows["mean"].to_numpy(),
        "count": rows["n"].to_numpy(),
    })
    out = []
    for _, group in frame.groupby(["series", "t"], sort=True):
        group = group.sort_values("center")
        width = float(np.diff(group["center"]).min()) if len(group) > 1 else 0.0
        out.append(group.assign(bin_low=group["center"] - width / 2, bin_high=group["center"] + width / 2))
    return pd.concat(out)[["t", "series", "bin_low", "bin_high", "density", "count"]]


def emit_plot_data(table: pd.DataFrame, figure_id: str, out_dir: str) -> List[str]:
    """Write the panel's data under out_dir and return the file paths."""
    if figure_id not in PANELS:
        raise InvalidArgumentError(f"Unknown figure id {figure_id!r}; choose from {sorted(PANELS)}")
    if table.empty:
        raise InvalidArgumentError("Result table is empty")
    panel = PANELS[figure_id]
    rows = _select(table, panel)

    if figure_id == "fig3d":
        frame = _histogram_frame(rows)
    else:
        frame = (
            rows.rename(columns={"x": panel.x_name, "group": "series"})
            [[panel.x_name, "series", "quantity", "mean", "stderr", "n"]]
            .sort_values(["quantity", "series", panel.x_name], kind="stable")
        )

    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{figure_id}.csv")
    frame.to_csv(path, index=False, float_format="%.12g")
    logger.info(f"{figure_id} ({panel.description}): {len(frame)} rows -> {path}")
    return [path]
