from pathlib import Path
from typing import IO

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.model.covariance import EffectCovariance, Unstructured
from src.model.estimate import ComparisonRow, EstimateBundle
from src.model.grid import TimeGrid
from src.model.study import StudyTable
from src.model.trajectory import ScenarioId
from src.util.errors import BundleFormatError, InvalidArgumentError
from src.util.logging import logger

FLOAT_FORMAT = "%.10g"

STUDY_COLUMNS = [
    "scenario",
    "estimand",
    "m",
    "k",
    "sigma",
    "grid_kind",
    "smart",
    "signal_pct",
    "se_pct",
    "rel_n_pct",
    "optimal_n_pct",
]

EFFECTS_COLUMNS = ["t", "delta"]


def write_frame(frame: pd.DataFrame, target: str | Path | IO[str]) -> None:
    """Tidy CSV with 10 significant digits, a period decimal separator and empty missing cells."""
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")


def study_frame(table: StudyTable) -> pd.DataFrame:
    records = [
        {
            "scenario": row.scenario.value,
            "estimand": row.estimand_id,
            "m": row.m,
            "k": row.k,
            "sigma": row.sigma_end,
            "grid_kind": row.grid_kind,
            "smart": "true" if row.smart else "false",
            "signal_pct": row.signal_pct,
            "se_pct": row.se_pct,
            "rel_n_pct": np.nan if row.rel_sample_size_pct is None else row.rel_sample_size_pct,
            "optimal_n_pct": row.optimal_sample_size_pct,
        }
        for row in table.rows
    ]
    return pd.DataFrame.from_records(records, columns=STUDY_COLUMNS)


def write_study_csv(table: StudyTable, target: str | Path | IO[str]) -> None:
    write_frame(study_frame(table), target)
    logger.debug("Wrote %d study rows", len(table.rows))


def read_study_csv(source: str | Path | IO[str]) -> list[ComparisonRow]:
    frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    missing = [c for c in STUDY_COLUMNS if c not in frame.columns]
    if missing:
        raise BundleFormatError("study file is missing columns", column=missing[0])
    return [
        ComparisonRow(
            scenario=ScenarioId(record["scenario"]),
            estimand_id=record["estimand"],
            m=int(record["m"]),
            k=float(record["k"]),
            sigma_end=float(record["sigma"]),
            grid_kind=record["grid_kind"],
            smart=record["smart"] == "true",
            signal_pct=float(record["signal_pct"]),
            se_pct=float(record["se_pct"]),
            rel_sample_size_pct=float(record["rel_n_pct"]) if record["rel_n_pct"] else None,
            optimal_sample_size_pct=float(record["optimal_n_pct"]),
        )
        for record in frame.to_dict(orient="records")
    ]


def _read(source: str | Path | IO[str], what: str, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(source, **kwargs)
    except pd.errors.EmptyDataError as e:
        raise BundleFormatError(f"{what} file is empty") from e
    except pd.errors.ParserError as e:
        logger.error("Could not parse %s file: %s", what, e)
        raise BundleFormatError(f"{what} file is not valid CSV: {e}") from e


def _numeric(frame: pd.DataFrame, what: str) -> np.ndarray:
    """Values as floats; the first non-numeric or missing cell is reported by 1-based data row."""
    values = frame.apply(pd.to_numeric, errors="coerce")
    bad = values.isna().to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise BundleFormatError(
            f"{what} file has a missing or non-numeric value {frame.iat[row, col]!r}",
            row=int(row) + 1,
            column=str(frame.columns[col]),
        )
    return values.to_numpy(dtype=float)


def read_effects(source: str | Path | IO[str]) -> tuple[TimeGrid, tuple[float, ...]]:
    """Header "t,delta" then one row per visit, t ascending from 0 to 1."""
    frame = _read(source, "effects", dtype=str, keep_default_na=False)
    if list(frame.columns) != EFFECTS_COLUMNS:
        logger.error("Effects header %s, expected %s", list(frame.columns), EFFECTS_COLUMNS)
        raise BundleFormatError(
            f"effects header must be {','.join(EFFECTS_COLUMNS)}, got {','.join(map(str, frame.columns))}"
        )
    values = _numeric(frame, "effects")
    try:
        grid = TimeGrid(points=tuple(values[:, 0].tolist()))
    except ValidationError as e:
        raise BundleFormatError(f"invalid visit times: {e.errors()[0]['msg']}", column="t") from e
    return grid, tuple(values[:, 1].tolist())


def read_covariance(source: str | Path | IO[str]) -> np.ndarray:
    """A bare m x m matrix, no header."""
    frame = _read(source, "covariance", header=None, dtype=str, keep_default_na=False)
    frame.columns = [str(c + 1) for c in frame.columns]
    matrix = _numeric(frame, "covariance")
    if matrix.shape[0] != matrix.shape[1]:
        raise BundleFormatError(
            f"covariance file must be square, got {matrix.shape[0]} rows and {matrix.shape[1]} columns"
        )
    return matrix


def read_bundle(
    effects: str | Path | IO[str], covariance: str | Path | IO[str]
) -> EstimateBundle:
    """
    Pair an effects file with its covariance file.
    :raises InvalidArgumentError: On format errors or mismatched dimensions.
    :raises ModelError: If the covariance is not positive definite.
    """
    grid, delta_hat = read_effects(effects)
    matrix = read_covariance(covariance)
    if matrix.shape[0] != grid.m:
        logger.error("Effects have %d visits, covariance is %dx%d", grid.m, *matrix.shape)
        raise InvalidArgumentError(
            f"effects file has {grid.m} visits but covariance file is {matrix.shape[0]}x{matrix.shape[1]}"
        )
    try:
        symmetric = Unstructured(matrix=matrix.tolist()).as_array()
        sigma = EffectCovariance.from_array(grid, symmetric)
        return EstimateBundle(grid=grid, delta_hat=delta_hat, sigma_hat=sigma)
    except ValidationError as e:
        raise BundleFormatError(f"invalid estimate bundle: {e.errors()[0]['msg']}") from e
