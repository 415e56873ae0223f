"""fit, profile and compare subcommands."""
import json
import logging
from pathlib import Path
from typing import Optional

import typer

from ewps.cli.common import EXIT_NOT_CONVERGED, console, fit_from_config, handle_errors, load_data, parse_range, print_fit, start
from ewps.errors import InputError
from ewps.export.csv_exporter import CSVExporter
from ewps.export.report_writer import build_report, report_json, write_atomic
from ewps.schemas.fit import FitOptions
from ewps.schemas.run import RunConfig
from ewps.schemas.series import FamilyTag, PowerSeriesSpec
from ewps.services.fit import compare_models, profile_theta

logger = logging.getLogger(__name__)

InputOpt = typer.Option(..., "--input", "-i", help="CSV file with a header row")
ResponseOpt = typer.Option("y", "--response", "-r", help="Response column")
CovariateOpt = typer.Option([], "--covariate", "-x", help="Covariate column (repeatable)")
FamilyOpt = typer.Option("geometric", "--family", "-f", help="Power series family, or 'weibull'")
MOpt = typer.Option(None, "--m", help="Known m for binomial / negative_binomial")
ExtendedOpt = typer.Option(False, "--extended", help="Extended theta domain (geometric, logarithmic)")
LinkOpt = typer.Option("log", "--link", help="Link function")
NoInterceptOpt = typer.Option(False, "--no-intercept", help="Drop the intercept column")
VerboseOpt = typer.Option(False, "--verbose", "-v", help="Debug logging")


def run_fit(
    input_path: Path = InputOpt,
    output: Path = typer.Option(..., "--output", "-o", help="JSON report path"),
    response: str = ResponseOpt,
    covariate: list[str] = CovariateOpt,
    family: str = FamilyOpt,
    m: Optional[int] = MOpt,
    extended: bool = ExtendedOpt,
    link: str = LinkOpt,
    no_intercept: bool = NoInterceptOpt,
    verbose: bool = VerboseOpt,
) -> None:
    """Fit the regression model and write a JSON report with estimates, LR test and profile."""
    start(verbose)
    _fit(input_path, output, response, covariate, family, m, extended, link, no_intercept)


@handle_errors
def _fit(input_path, output, response, covariate, family, m, extended, link, no_intercept) -> None:
    config = RunConfig(
        subcommand="fit",
        input_path=input_path,
        response_column=response,
        covariate_columns=covariate,
        family=family,
        m=m,
        extended=extended,
        link=link,
        intercept=not no_intercept,
        output_path=output,
    )
    data = load_data(config)
    fit, null = fit_from_config(config, data)
    report = build_report(fit, config, null=null)
    write_atomic(output, report_json(report))
    print_fit(fit)
    if report.lr is not None:
        console.print(f"LR vs Weibull: {report.lr.statistic:.4f} (p={report.lr.p_value:.4g})")
    if not fit.converged:
        logger.warning("fit did not converge: %s", fit.message)
        raise typer.Exit(code=EXIT_NOT_CONVERGED)


def run_profile(
    input_path: Path = InputOpt,
    output: Path = typer.Option(..., "--output", "-o", help="CSV path for (theta, loglik)"),
    grid: str = typer.Option(..., "--grid", "-g", help="theta grid: start:stop:count or a,b,c"),
    response: str = ResponseOpt,
    covariate: list[str] = CovariateOpt,
    family: str = FamilyOpt,
    m: Optional[int] = MOpt,
    extended: bool = ExtendedOpt,
    link: str = LinkOpt,
    no_intercept: bool = NoInterceptOpt,
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads (default EWPS_THREADS)"),
    verbose: bool = VerboseOpt,
) -> None:
    """Profile log-likelihood over a theta grid."""
    start(verbose)
    _profile(input_path, output, grid, response, covariate, family, m, extended, link, no_intercept, threads)


@handle_errors
def _profile(input_path, output, grid, response, covariate, family, m, extended, link, no_intercept, threads) -> None:
    config = RunConfig(
        subcommand="profile",
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
    if config.is_weibull:
        raise InputError("profiling needs a power series family, not weibull")
    thetas = parse_range(grid, what="theta grid")
    points = profile_theta(load_data(config), config.spec(), list(thetas), FitOptions.from_settings(), threads=threads)
    write_atomic(output, CSVExporter().profile(points))
    missing = sum(p.loglik is None for p in points)
    console.print(f"profiled {len(points)} theta values ({missing} failed)")


def run_compare(
    input_path: Path = InputOpt,
    output: Path = typer.Option(..., "--output", "-o", help="JSON path for the comparison rows"),
    response: str = ResponseOpt,
    covariate: list[str] = CovariateOpt,
    families: list[str] = typer.Option(
        ["logarithmic", "geometric", "poisson"], "--family", "-f", help="Families to fit (repeatable)"
    ),
    m: Optional[int] = MOpt,
    link: str = LinkOpt,
    no_intercept: bool = NoInterceptOpt,
    verbose: bool = VerboseOpt,
) -> None:
    """Fit Weibull and each family; write loglik, LR and AIC rows."""
    start(verbose)
    _compare(input_path, output, response, covariate, families, m, link, no_intercept)


@handle_errors
def _compare(input_path, output, response, covariate, families, m, link, no_intercept) -> None:
    config = RunConfig(
        subcommand="compare",
        input_path=input_path,
        response_column=response,
        covariate_columns=covariate,
        link=link,
        intercept=not no_intercept,
        output_path=output,
    )
    specs = []
    for name in families:
        try:
            tag = FamilyTag(name.strip().lower())
        except ValueError:
            raise InputError(f"unknown family '{name}'") from None
        specs.append(PowerSeriesSpec.of(tag, m=m if tag in (FamilyTag.BINOMIAL, FamilyTag.NEGATIVE_BINOMIAL) else None))
    rows = compare_models(load_data(config), specs, FitOptions.from_settings())
    write_atomic(output, json.dumps([row.model_dump(exclude_none=True) for row in rows], indent=2) + "\n")
    for row in rows:
        lr = "" if row.lr_statistic is None else f"  LR={row.lr_statistic:.4f} (p={row.lr_p_value:.4g})"
        console.print(f"{row.label:<8} loglik={row.loglik:.4f}  AIC={row.aic:.2f}{lr}")
