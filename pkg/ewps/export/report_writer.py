"""Fit reports as JSON, and atomic file output."""
import logging
import os
import tempfile
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from ewps.errors import InputError
from ewps.schemas.fit import FitResult
from ewps.schemas.report import EstimateEntry, FitReport, HypothesisTest
from ewps.schemas.run import WEIBULL, RunConfig
from ewps.services.fit import lr_test, wald_test

logger = logging.getLogger(__name__)


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to a temporary sibling and rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.debug("wrote %s", path)


def build_report(
    fit: FitResult,
    config: RunConfig,
    null: Optional[FitResult] = None,
    covariate_columns: Optional[list[str]] = None,
) -> FitReport:
    spec = fit.params.spec
    ses = fit.standard_errors or [None] * fit.n_params
    estimates = [
        EstimateEntry(name=name, value=float(value), se=se) for name, value, se in zip(fit.names, fit.estimates, ses)
    ]
    lr = wald = None
    if not fit.theta_fixed:
        if null is not None:
            statistic, p_value = lr_test(fit, null.loglik)
            lr = HypothesisTest(statistic=statistic, p_value=p_value)
        if fit.covariance is not None:
            statistic, p_value = wald_test(fit)
            wald = HypothesisTest(statistic=statistic, p_value=p_value)
    return FitReport(
        family=WEIBULL if fit.theta_fixed else spec.tag.value,
        label=fit.label,
        link=fit.link,
        n=fit.n,
        k=fit.k,
        estimates=estimates,
        loglik=fit.loglik,
        aic=fit.aic,
        lr=lr,
        wald=wald,
        converged=fit.converged,
        boundary_flag=fit.boundary_flag,
        profile=fit.profile,
        response_column=config.response_column,
        covariate_columns=list(covariate_columns if covariate_columns is not None else config.covariate_columns),
        intercept=config.intercept,
        m=None if fit.theta_fixed else spec.m,
        extended=False if fit.theta_fixed else spec.extended,
        theta_fixed=fit.theta_fixed,
        covariance=fit.covariance,
        message=fit.message,
    )


def report_json(report: FitReport) -> str:
    return report.model_dump_json(indent=2, exclude_none=True) + "\n"


def read_report(path: Path) -> FitReport:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read fit report {path}: {e}") from e
    try:
        return FitReport.model_validate_json(text)
    except ValidationError as e:
        raise InputError(f"{path} is not a valid fit report: {e.error_count()} problem(s)") from e
