"""curves and simulate subcommands."""
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import typer

from ewps.cli.common import console, handle_errors, parse_range, start
from ewps.cli.fitting import ExtendedOpt, MOpt, VerboseOpt
from ewps.errors import InputError
from ewps.export.csv_exporter import CSVExporter
from ewps.export.report_writer import read_report, write_atomic
from ewps.schemas.params import EwpsParams
from ewps.schemas.run import RunConfig
from ewps.services.data_loader import load_design
from ewps.services.ewps_dist import cdf, density, hazard, sample, sample_compositional, survival
from ewps.services.simulation import simulate_regression

logger = logging.getLogger(__name__)

DistFamilyOpt = typer.Option("poisson", "--family", "-f", help="Power series family")
LamOpt = typer.Option(1.0, "--lambda", help="Scale")
AlphaOpt = typer.Option(1.0, "--alpha", help="Shape")
ThetaOpt = typer.Option(0.0, "--theta", help="Power series parameter (0 = Weibull)")


def _params(family: str, m: Optional[int], extended: bool, lam: float, alpha: float, theta: float) -> EwpsParams:
    config = RunConfig(subcommand="curves", family=family, m=m, extended=extended)
    if config.is_weibull and theta != 0.0:
        raise InputError("family weibull takes no theta")
    return EwpsParams(lam=lam, alpha=alpha, theta=theta, spec=config.spec())


def run_curves(
    output: Path = typer.Option(..., "--output", "-o", help="CSV path"),
    grid: str = typer.Option("0.05:3:60", "--grid", "-g", help="y grid: start:stop:count or a,b,c"),
    family: str = DistFamilyOpt,
    m: Optional[int] = MOpt,
    extended: bool = ExtendedOpt,
    lam: float = LamOpt,
    alpha: float = AlphaOpt,
    theta: float = ThetaOpt,
    verbose: bool = VerboseOpt,
) -> None:
    """Tabulate pdf, cdf, survival and hazard on a y grid."""
    start(verbose)
    _curves(output, grid, family, m, extended, lam, alpha, theta)


@handle_errors
def _curves(output, grid, family, m, extended, lam, alpha, theta) -> None:
    params = _params(family, m, extended, lam, alpha, theta)
    y = parse_range(grid, what="y grid")
    if np.any(y <= 0):
        raise InputError("every grid point must be positive")
    table = CSVExporter().curves(
        y.tolist(),
        np.asarray(density(params, y)).tolist(),
        np.asarray(cdf(params, y)).tolist(),
        np.asarray(survival(params, y)).tolist(),
        np.asarray(hazard(params, y)).tolist(),
    )
    write_atomic(output, table)
    console.print(f"wrote {y.size} rows to {output}")


def run_simulate(
    output: Path = typer.Option(..., "--output", "-o", help="CSV path"),
    n: int = typer.Option(1000, "--n", "-n", help="Number of draws"),
    seed: int = typer.Option(0, "--seed", help="Random seed"),
    family: str = DistFamilyOpt,
    m: Optional[int] = MOpt,
    extended: bool = ExtendedOpt,
    lam: float = LamOpt,
    alpha: float = AlphaOpt,
    theta: float = ThetaOpt,
    compositional: bool = typer.Option(False, "--compositional", help="Draw via the series/parallel construction"),
    report: Optional[Path] = typer.Option(None, "--report", help="Fit report supplying beta, alpha, theta"),
    input_path: Optional[Path] = typer.Option(None, "--input", "-i", help="Design rows for regression simulation"),
    verbose: bool = VerboseOpt,
) -> None:
    """Draw samples from EWPS, or responses at each design row of --input using a fit report."""
    start(verbose)
    _simulate(output, n, seed, family, m, extended, lam, alpha, theta, compositional, report, input_path)


@handle_errors
def _simulate(output, n, seed, family, m, extended, lam, alpha, theta, compositional, report, input_path):
    if report is not None:
        if input_path is None:
            raise InputError("regression simulation needs --input with the design columns")
        fitted = read_report(report)
        fit = fitted.to_fit_result()
        X = load_design(input_path, fitted.covariate_columns, intercept=fitted.intercept)
        p = fit.params
        logger.info("simulating %d responses from the %s fit in %s", X.shape[0], fit.label, report)
        draws = simulate_regression(p.beta, p.alpha, p.theta, p.spec, X, seed, link=fit.link, compositional=compositional)
    else:
        if n < 1:
            raise InputError("--n must be at least 1")
        params = _params(family, m, extended, lam, alpha, theta)
        draws = sample_compositional(params, n, seed) if compositional else sample(params, n, seed)
    write_atomic(output, CSVExporter().samples(np.asarray(draws).tolist()))
    console.print(f"wrote {len(draws)} draws to {output}")
