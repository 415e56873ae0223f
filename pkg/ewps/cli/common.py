"""Shared CLI plumbing: error mapping, option parsing, data and fit loading."""
import functools
import logging
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from ewps.errors import EwpsError, InputError
from ewps.export.report_writer import read_report
from ewps.logging_setup import configure_logging
from ewps.schemas.fit import FitOptions, FitResult
from ewps.schemas.params import RegressionData
from ewps.schemas.run import RunConfig
from ewps.services.data_loader import load_regression_data
from ewps.services.fit import fit_mle, fit_weibull

logger = logging.getLogger(__name__)

console = Console()
err_console = Console(stderr=True)

EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2


def handle_errors(func: Callable) -> Callable:
    """Map package and validation errors to exit status 1 with a one-line message."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except typer.Exit:
            raise
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(part) for part in first.get("loc", ()))
            err_console.print(f"[red]error:[/red] {where + ': ' if where else ''}{first.get('msg')}")
            raise typer.Exit(code=EXIT_INPUT) from e
        except EwpsError as e:
            err_console.print(f"[red]error:[/red] {e}")
            raise typer.Exit(code=EXIT_INPUT) from e

    return wrapper


def start(verbose: bool) -> None:
    configure_logging(verbose)


def parse_range(text: str, what: str = "grid") -> np.ndarray:
    """'start:stop:count' -> count evenly spaced values; 'a,b,c' -> those values."""
    try:
        if ":" in text:
            first, last, count = text.split(":")
            values = np.linspace(float(first), float(last), int(count))
        else:
            values = np.asarray([float(v) for v in text.split(",") if v.strip()], dtype=float)
    except ValueError:
        raise InputError(f"cannot parse {what} '{text}' (use start:stop:count or a,b,c)") from None
    if values.size == 0:
        raise InputError(f"{what} '{text}' is empty")
    return values


def parse_assignments(items: list[str]) -> dict[str, np.ndarray]:
    """['length=5,10', 'log_diameter=-2:-1:5'] -> {'length': [5, 10], ...}."""
    out: dict[str, np.ndarray] = {}
    for item in items:
        name, sep, values = item.partition("=")
        if not sep or not name.strip():
            raise InputError(f"expected NAME=VALUES, got '{item}'")
        out[name.strip()] = parse_range(values, what=f"values for {name.strip()}")
    return out


def load_data(config: RunConfig) -> RegressionData:
    if config.input_path is None:
        raise InputError("an input CSV file is required (--input)")
    return load_regression_data(
        config.input_path,
        config.response_column,
        config.covariate_columns,
        intercept=config.intercept,
        link=config.link,
    )


def fit_from_config(config: RunConfig, data: RegressionData) -> tuple[FitResult, FitResult]:
    """(fit, weibull null); the two coincide for family=weibull."""
    options = FitOptions.from_settings()
    null = fit_weibull(data, options)
    if config.is_weibull:
        return null, null
    return fit_mle(data, config.spec(), options), null


def fit_or_report(config: RunConfig, report_path: Optional[Path]) -> tuple[FitResult, RunConfig]:
    """Load a prior fit report (no refit) or fit the model described by ``config``."""
    if report_path is not None:
        report = read_report(report_path)
        merged = config.model_copy(
            update={
                "response_column": report.response_column,
                "covariate_columns": report.covariate_columns,
                "intercept": report.intercept,
                "link": report.link,
            }
        )
        return report.to_fit_result(), merged
    fit, _ = fit_from_config(config, load_data(config))
    return fit, config


def print_fit(fit: FitResult) -> None:
    table = Table(title=f"{fit.label} fit (n={fit.n})")
    table.add_column("parameter")
    table.add_column("estimate", justify="right")
    table.add_column("se", justify="right")
    ses = fit.standard_errors or [None] * fit.n_params
    for name, value, se in zip(fit.names, fit.estimates, ses):
        table.add_row(name, f"{value:.6g}", "-" if se is None else f"{se:.4g}")
    console.print(table)
    console.print(f"loglik={fit.loglik:.4f}  AIC={fit.aic:.2f}  converged={fit.converged}")
