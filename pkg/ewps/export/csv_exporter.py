"""Render curves, quantile bands, residuals, samples and profiles as CSV text."""
import csv
import io
from typing import Iterable, Sequence

from ewps.schemas.diagnostics import ResidualSet
from ewps.schemas.fit import ProfilePoint


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class CSVExporter:
    """Each method returns the full CSV document (header row first)."""

    @staticmethod
    def _render(header: Sequence[str], rows: Iterable[Sequence]) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def curves(self, y, pdf, cdf, survival, hazard) -> str:
        return self._render(["y", "pdf", "cdf", "survival", "hazard"], zip(y, pdf, cdf, survival, hazard))

    def quantiles(self, covariate_names: Sequence[str], rows: Iterable[Sequence]) -> str:
        """rows: (xi, *covariate values, q_hat, var_q, ci_low, ci_high)."""
        header = ["xi", *covariate_names, "q_hat", "var_q", "ci_low", "ci_high"]
        return self._render(header, rows)

    def residuals(self, y: Sequence[float], residual_set: ResidualSet) -> str:
        rows = (
            (i + 1, float(yi), cdf, res, clipped)
            for i, (yi, cdf, res, clipped) in enumerate(
                zip(y, residual_set.cdf_values, residual_set.residuals, residual_set.clipped)
            )
        )
        return self._render(["index", "y", "cdf", "residual", "clipped"], rows)

    def qq(self, residual_set: ResidualSet) -> str:
        return self._render(["theoretical", "observed"], ((p.theoretical, p.observed) for p in residual_set.qq_pairs))

    def samples(self, draws: Sequence[float]) -> str:
        return self._render(["y"], ((float(v),) for v in draws))

    def profile(self, points: Sequence[ProfilePoint]) -> str:
        return self._render(["theta", "loglik"], ((p.theta, p.loglik) for p in points))

    def dataset(self, response: str, covariate_names: Sequence[str], y: Sequence[float], columns) -> str:
        """Response first, then one column per covariate (``columns`` is n x len(covariate_names))."""
        rows = ((float(yi), *(float(v) for v in row)) for yi, row in zip(y, columns))
        return self._render([response, *covariate_names], rows)
