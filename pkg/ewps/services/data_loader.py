"""CSV ingestion into RegressionData."""
import csv
import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from ewps.errors import InputError
from ewps.schemas.params import RegressionData

logger = logging.getLogger(__name__)


def read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a UTF-8 CSV file."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    except (UnicodeDecodeError, csv.Error) as e:
        raise InputError(f"{path} is not a readable UTF-8 CSV file: {e}") from e
    if not rows:
        raise InputError(f"{path} is empty")
    header = [cell.strip() for cell in rows[0]]
    if any(_is_number(cell) for cell in header):
        raise InputError(f"{path} has no header row (first row is numeric)")
    return header, rows[1:]


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _column(header: list[str], rows: list[list[str]], name: str, path: Path) -> np.ndarray:
    if name not in header:
        raise InputError(f"column '{name}' not found in {path} (columns: {', '.join(header)})")
    j = header.index(name)
    values = np.empty(len(rows))
    for i, row in enumerate(rows):
        # data rows are numbered from 2: line 1 is the header
        if j >= len(row):
            raise InputError(f"row {i + 2}, column '{name}': missing value")
        try:
            values[i] = float(row[j])
        except ValueError:
            raise InputError(f"row {i + 2}, column '{name}': non-numeric value '{row[j]}'") from None
    return values


def load_regression_data(
    path: Path,
    response_column: str,
    covariate_columns: Sequence[str] = (),
    intercept: bool = True,
    link: str = "log",
) -> RegressionData:
    header, rows = read_table(path)
    if not rows:
        raise InputError(f"{path} has a header but no data rows")
    y = _column(header, rows, response_column, path)
    columns = [_column(header, rows, name, path) for name in covariate_columns]
    names = list(covariate_columns)
    if intercept:
        columns.insert(0, np.ones(len(rows)))
        names.insert(0, "intercept")
    if not columns:
        raise InputError("the model needs an intercept or at least one covariate")
    if np.any(y <= 0):
        bad = int(np.argmax(y <= 0))
        raise InputError(f"row {bad + 2}, column '{response_column}': responses must be positive")
    logger.info("loaded %d rows from %s (covariates: %s)", len(rows), path, ", ".join(names))
    try:
        return RegressionData(y=y, X=np.column_stack(columns), link=link, covariate_names=tuple(names))
    except ValueError as e:
        raise InputError(str(e)) from e


def design_matrix(covariate_values: Sequence[Sequence[float]], intercept: bool) -> np.ndarray:
    """Stack covariate rows, prepending the intercept column when requested."""
    X = np.atleast_2d(np.asarray(covariate_values, dtype=float))
    if intercept:
        X = np.column_stack([np.ones(X.shape[0]), X]) if X.size else np.ones((X.shape[0], 1))
    return X


def load_design(path: Path, covariate_columns: Sequence[str] = (), intercept: bool = True) -> np.ndarray:
    """Design matrix only; the response column need not be present."""
    header, rows = read_table(path)
    if not rows:
        raise InputError(f"{path} has a header but no data rows")
    columns = [_column(header, rows, name, path) for name in covariate_columns]
    if not columns and not intercept:
        raise InputError("the model needs an intercept or at least one covariate")
    if not columns:
        return np.ones((len(rows), 1))
    return design_matrix(np.column_stack(columns), intercept)
