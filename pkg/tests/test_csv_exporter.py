import csv
import io

from ewps.export.csv_exporter import CSVExporter
from ewps.schemas.diagnostics import ResidualSet


def _parse(text):
    return list(csv.reader(io.StringIO(text)))


def test_dataset_layout():
    rows = _parse(CSVExporter().dataset("strength", ["length", "log_diameter"], [1.5, 2.0], [[5.0, -1.2], [10.0, -0.9]]))
    assert rows[0] == ["strength", "length", "log_diameter"]
    assert [float(v) for v in rows[2]] == [2.0, 10.0, -0.9]
    assert len(rows) == 3


def test_residuals_without_normality_check():
    result = ResidualSet(residuals=[0.1, -0.2], cdf_values=[0.54, 0.42], clipped=[False, False], qq_pairs=[])
    rows = _parse(CSVExporter().residuals([1.0, 2.0], result))
    assert rows[1] == ["1", "1.0", "0.54", "0.1", "false"]
