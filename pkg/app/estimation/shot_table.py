import os
from typing import List, Optional

import pandas as pd

from app.estimation.records import ShotRecord
from app.utils.errors import InvalidArgumentError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

SHOT_COLUMNS = ["t", "shot", "site", "ensemble", "quadrature", "outcome"]


def check_shot_table(table: pd.DataFrame) -> pd.DataFrame:
    missing = [c for c in SHOT_COLUMNS if c not in table.columns]
    if missing:
        raise InvalidArgumentError(f"Shot table is missing columns {missing}")
    bad_quadrature = set(table["quadrature"].unique()) - {"X", "Y"}
    if bad_quadrature:
        raise InvalidArgumentError(f"Unknown quadratures {sorted(bad_quadrature)}")
    if not table["outcome"].isin([0, 1]).all():
        raise InvalidArgumentError("Outcomes must be 0 or 1")
    return table[SHOT_COLUMNS]


def save_shot_table(table: pd.DataFrame, path: str) -> str:
    table = check_shot_table(table).sort_values(["t", "shot", "site"], kind="mergesort")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    table.to_csv(path, index=False, float_format="%.12g")
    logger.info(f"Wrote {len(table)} shot rows to {path}")
    return path


def load_shot_table(path: str) -> pd.DataFrame:
    table = pd.read_csv(path, dtype={"quadrature": str})
    return check_shot_table(table)


def records_from_table(table: pd.DataFrame, ensemble: Optional[int] = None) -> List[ShotRecord]:
    """
    One ShotRecord per (t, shot, ensemble), pooling each quadrature's atoms.

    Unequal X and Y atom counts are allowed and logged; the dual-quadrature
    estimate uses the pooled fractions as they are.
    """
    table = check_shot_table(table)
    if ensemble is not None:
        table = table[table["ensemble"] == ensemble]
    counts = (
        table.groupby(["t", "shot", "ensemble", "quadrature"], sort=True)["outcome"]
        .agg(["sum", "size"])
        .unstack("quadrature")
        .reindex(columns=pd.MultiIndex.from_product([["sum", "size"], ["X", "Y"]]))
    )
    if counts.isna().any().any():
        raise InvalidArgumentError("Every shot needs atoms in both quadratures")

    records = []
    imbalanced = 0
    for (t, _shot, _ensemble), row in counts.iterrows():
        n_x, n_y = int(row[("size", "X")]), int(row[("size", "Y")])
        imbalanced += n_x != n_y
        records.append(
            ShotRecord.from_counts(float(t), int(row[("sum", "X")]), n_x, int(row[("sum", "Y")]), n_y)
        )
    if imbalanced:
        logger.warning(f"{imbalanced} shots have unequal X/Y atom counts")
    return records
