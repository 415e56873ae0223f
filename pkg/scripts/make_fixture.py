"""Regenerates ewps/data/coconut_like.csv: a 225-row EWG regression sample of strength on length and log diameter. Run with: python scripts/make_fixture.py [seed]"""
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from ewps.export.csv_exporter import CSVExporter  # noqa: E402
from ewps.export.report_writer import write_atomic  # noqa: E402
from ewps.schemas.params import RegressionParams  # noqa: E402
from ewps.schemas.series import PowerSeriesSpec  # noqa: E402
from ewps.services.simulation import simulate_data  # noqa: E402

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 20240611
n = 225
out_path = os.path.join(os.path.dirname(__file__), "..", "ewps", "data", "coconut_like.csv")

rng = np.random.default_rng([seed, 1])
length = np.resize([5.0, 10.0, 15.0, 20.0, 25.0, 35.0], n)
log_diameter = np.log(rng.uniform(0.1, 0.45, n))
X = np.column_stack([np.ones(n), length, log_diameter])

truth = RegressionParams(beta=(0.1, -0.011, -0.59), alpha=5.05, theta=0.9455, spec=PowerSeriesSpec.of("geometric"))
data = simulate_data(truth, X, seed=seed, names=("intercept", "length", "log_diameter"))

write_atomic(out_path, CSVExporter().dataset("strength", ["length", "log_diameter"], data.y, X[:, 1:]))
print(f"Wrote {n} rows to {os.path.normpath(out_path)} (seed {seed}).")
