"""CSV ingestion.

Files must be UTF-8 with a header row. Parsing is strict: an empty,
non-numeric or non-finite cell aborts with the file line and column name.
Line numbers count the header as line 1.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path

import pandas as pd

from hstar.errors import EmptyColumn, InvalidParameter, ParseError
from hstar.models import PairedStudy

logger = logging.getLogger(__name__)

PAIRED_COLUMNS = ("id", "pre", "post")


def _read(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8"
        )
    except FileNotFoundError as e:
        raise ParseError(f"{path}: file not found", path=str(path)) from e
    except pd.errors.EmptyDataError as e:
        raise EmptyColumn(f"{path}: file is empty", path=str(path)) from e
    except (UnicodeDecodeError, pd.errors.ParserError) as e:
        raise ParseError(f"{path}: {e}", path=str(path)) from e
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame


def _resolve_column(frame: pd.DataFrame, column: str | None, path: str | Path) -> str:
    columns = list(frame.columns)
    if column is None:
        if len(columns) != 1:
            raise InvalidParameter(
                f"{path} has {len(columns)} columns; choose one of {columns}",
                columns=columns,
            )
        return columns[0]
    if column in columns:
        return column
    if column.isdigit() and int(column) < len(columns):
        return columns[int(column)]
    raise InvalidParameter(
        f"{path} has no column '{column}'; available: {columns}", columns=columns
    )


def _parse_cells(series: pd.Series, column: str, path: str | Path) -> list[float]:
    values = []
    for offset, raw in enumerate(series.tolist()):
        line = offset + 2
        cell = str(raw).strip()
        try:
            value = float(cell)
        except ValueError:
            problem = "missing value" if not cell else f"'{cell}' is not a number"
            raise ParseError(
                f"{path}: line {line}, column '{column}': {problem}",
                path=str(path),
                row=line,
                column=column,
            ) from None
        if not math.isfinite(value):
            raise ParseError(
                f"{path}: line {line}, column '{column}': '{cell}' is not finite",
                path=str(path),
                row=line,
                column=column,
            )
        values.append(value)
    return values


def ingest_csv(path: str | Path, column: str | None = None) -> list[float]:
    """Read one numeric column in file order.

    Args:
        path: CSV file with a header row.
        column: Column name, or a zero-based position; may be omitted when
            the file has a single column.

    Returns:
        The values.

    Raises:
        ParseError: A cell is empty, non-numeric or not finite.
        EmptyColumn: The file has no data rows.
        InvalidParameter: The column does not exist or is ambiguous.
    """
    frame = _read(path)
    name = _resolve_column(frame, column, path)
    if frame.empty:
        raise EmptyColumn(f"{path}: column '{name}' has no values", column=name)
    values = _parse_cells(frame[name], name, path)
    logger.info("Read %d values from %s[%s]", len(values), path, name)
    return values


def ingest_labels(path: str | Path, column: str) -> list[str]:
    """Read a column verbatim, for use as candidate labels."""
    frame = _read(path)
    name = _resolve_column(frame, column, path)
    return [str(v).strip() for v in frame[name].tolist()]


def ingest_paired(path: str | Path, *, log_transform: bool = True) -> PairedStudy:
    """Read an ``id,pre,post`` file into a paired study.

    Raises:
        ParseError: A required column is missing, an id repeats, or a
            score cell is invalid.
        EmptyColumn: The file has no data rows.
    """
    frame = _read(path)
    missing = [c for c in PAIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(
            f"{path}: paired files need columns {list(PAIRED_COLUMNS)}; missing {missing}",
            path=str(path),
            missing=missing,
        )
    if frame.empty:
        raise EmptyColumn(f"{path}: no paired rows", path=str(path))
    ids = [str(v).strip() for v in frame["id"].tolist()]
    duplicated = frame["id"].str.strip().duplicated()
    if duplicated.any():
        line = int(duplicated.to_numpy().argmax()) + 2
        raise ParseError(
            f"{path}: line {line}, column 'id': '{ids[line - 2]}' repeats",
            path=str(path),
            row=line,
            column="id",
        )
    study = PairedStudy(
        ids=ids,
        pre_scores=_parse_cells(frame["pre"], "pre", path),
        post_scores=_parse_cells(frame["post"], "post", path),
        log_transform=log_transform,
    )
    logger.info("Read %d pairs from %s", len(ids), path)
    return study
