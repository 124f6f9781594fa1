"""Deterministic CSV output: fixed column order, positional decimals, 12 significant digits."""

from pathlib import Path

import numpy as np
import pandas as pd

from twpa_flux_sim.models.snail import SnailExpansion

SIGNIFICANT_DIGITS = 12
SNAIL_COLUMNS = ["flux_ratio", "phi_star", "alpha_tilde", "beta", "gamma", "l_eff_H"]


def format_number(value: float) -> str:
    if not np.isfinite(value):
        return "nan" if np.isnan(value) else ("inf" if value > 0 else "-inf")
    return np.format_float_positional(
        value,
        precision=SIGNIFICANT_DIGITS,
        unique=False,
        fractional=False,
        trim="-",
    )


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    """Write `frame` with floats formatted for byte-identical reruns."""
    formatted = frame.copy()
    for column in formatted.columns:
        if pd.api.types.is_bool_dtype(formatted[column]):
            formatted[column] = formatted[column].map(lambda b: "true" if b else "false")
        elif pd.api.types.is_float_dtype(formatted[column]):
            formatted[column] = formatted[column].map(format_number)
    path.parent.mkdir(parents=True, exist_ok=True)
    formatted.to_csv(path, index=False, lineterminator="\n")
    return path


def snail_frame(rows: list[SnailExpansion]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (r.flux_ratio, r.phi_star, r.alpha_tilde, r.beta, r.gamma, r.l_eff)
            for r in rows
        ],
        columns=SNAIL_COLUMNS,
        dtype=float,
    )
