"""quantiles and residuals subcommands; both accept a prior fit report instead of refitting."""
import itertools
import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import typer

from ewps.cli.common import console, fit_or_report, handle_errors, load_data, parse_assignments, parse_range, start
from ewps.cli.fitting import (
    CovariateOpt,
    ExtendedOpt,
    FamilyOpt,
    LinkOpt,
    MOpt,
    NoInterceptOpt,
    ResponseOpt,
    VerboseOpt,
)
from ewps.errors import InputError
from ewps.export.csv_exporter import CSVExporter
from ewps.export.report_writer import write_atomic
from ewps.schemas.run import RunConfig
from ewps.services.diagnostics import quantile_residuals
from ewps.services.fit import quantile_fit

logger = logging.getLogger(__name__)

ReportOpt = typer.Option(None, "--report", help="Prior fit report (JSON); skips refitting")
OptionalInputOpt = typer.Option(None, "--input", "-i", help="CSV file with a header row")


def run_quantiles(
    output: Path = typer.Option(..., "--output", "-o", help="CSV path"),
    xi: str = typer.Option("0.1,0.5,0.9", "--xi", help="Quantile orders: a,b,c or start:stop:count"),
    at: list[str] = typer.Option([], "--at", help="Covariate grid NAME=VALUES (repeatable)"),
    report: Optional[Path] = ReportOpt,
    input_path: Optional[Path] = OptionalInputOpt,
    response: str = ResponseOpt,
    covariate: list[str] = CovariateOpt,
    family: str = FamilyOpt,
    m: Optional[int] = MOpt,
    extended: bool = ExtendedOpt,
    link: str = LinkOpt,
    no_intercept: bool = NoInterceptOpt,
    level: float = typer.Option(0.95, "--level", help="Confidence level of the bands"),
    verbose: bool = VerboseOpt,
) -> None:
    """Quantile curves with delta-method confidence bands over a covariate grid."""
    start(verbose)
    _quantiles(output, xi, at, report, input_path, response, covariate, family, m, extended, link, no_intercept, level)


@handle_errors
def _quantiles(output, xi, at, report, input_path, response, covariate, family, m, extended, link, no_intercept, level):
    config = RunConfig(
        subcommand="quantiles",
        input_path=input_path,
        response_column=response,
        covariate_columns=covariate,
        family=family,
        m=m,
        extended=extended,
        link=link,
        intercept=not no_intercept,
        output_path=output,
        format="csv",
    )
    xis = parse_range(xi, what="xi list")
    if np.any(xis <= 0) or np.any(xis >= 1):
        raise InputError("every xi must lie strictly between 0 and 1")
    fit, config = fit_or_report(config, report)
    grid = parse_assignments(at)
    names = config.covariate_columns
    unknown = sorted(set(grid) - set(names))
    if unknown:
        raise InputError(f"--at names a column that is not a covariate: {', '.join(unknown)}")
    missing = [name for name in names if name not in grid]
    if missing:
        raise InputError(f"no --at values for covariate(s): {', '.join(missing)}")
    rows = []
    for values in itertools.product(*(grid[name] for name in names)):
        x_row = ([1.0] if config.intercept else []) + [float(v) for v in values]
        for order in xis:
            est = quantile_fit(fit, float(order), x_row, level=level)
            rows.append((float(order), *[float(v) for v in values], est.point, est.variance, est.ci_low, est.ci_high))
    write_atomic(output, CSVExporter().quantiles(names, rows))
    console.print(f"wrote {len(rows)} quantile rows to {output}")


def run_residuals(
    output: Path = typer.Option(..., "--output", "-o", help="CSV path for per-observation residuals"),
    input_path: Path = typer.Option(..., "--input", "-i", help="CSV file with a header row"),
    report: Optional[Path] = ReportOpt,
    response: str = ResponseOpt,
    covariate: list[str] = CovariateOpt,
    family: str = FamilyOpt,
    m: Optional[int] = MOpt,
    extended: bool = ExtendedOpt,
    link: str = LinkOpt,
    no_intercept: bool = NoInterceptOpt,
    qq_output: Optional[Path] = typer.Option(None, "--qq-output", help="CSV path for Q-Q pairs"),
    summary: Optional[Path] = typer.Option(None, "--summary", help="JSON path for the normality summary"),
    verbose: bool = VerboseOpt,
) -> None:
    """Quantile residuals, Q-Q pairs and the Anderson-Darling normality check."""
    start(verbose)
    _residuals(output, input_path, report, response, covariate, family, m, extended, link, no_intercept, qq_output, summary)


@handle_errors
def _residuals(output, input_path, report, response, covariate, family, m, extended, link, no_intercept, qq_output, summary):
    config = RunConfig(
        subcommand="residuals",
        input_path=input_path,
        response_column=response,
        covariate_columns=covariate,
        family=family,
        m=m,
        extended=extended,
        link=link,
        intercept=not no_intercept,
        output_path=output,
        format="csv",
    )
    fit, config = fit_or_report(config, report)
    data = load_data(config)
    result = quantile_residuals(fit, data)
    exporter = CSVExporter()
    write_atomic(output, exporter.residuals(data.y.tolist(), result))
    if qq_output is not None:
        write_atomic(qq_output, exporter.qq(result))
    payload = {
        "n": result.n,
        "ad_statistic": result.ad_statistic,
        "ad_p_value": result.ad_p_value,
        "clipped": result.n_clipped,
    }
    if summary is not None:
        write_atomic(summary, json.dumps(payload, indent=2) + "\n")
    if result.ad_statistic is None:
        console.print(f"Anderson-Darling unavailable for n={result.n}, clipped={result.n_clipped}")
    else:
        console.print(f"Anderson-Darling A*={result.ad_statistic:.4f} (p={result.ad_p_value:.4g}), clipped={result.n_clipped}")
