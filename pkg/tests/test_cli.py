import csv
import json

import pytest
from typer.testing import CliRunner

from ewps.cli import app
from ewps.cli.common import EXIT_INPUT, parse_assignments, parse_range
from ewps.errors import InputError

from tests.conftest import FIXTURE

runner = CliRunner()

FIT_ARGS = ["--response", "strength", "--covariate", "length", "--covariate", "log_diameter"]


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def weibull_report(tmp_path, fixture_path):
    out = tmp_path / "fit.json"
    result = runner.invoke(app, ["fit", "-i", str(fixture_path), "-o", str(out), "--family", "weibull", *FIT_ARGS])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope="module")
def geometric_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("ewg") / "fit.json"
    result = runner.invoke(app, ["fit", "-i", str(FIXTURE), "-o", str(out), "--family", "geometric", *FIT_ARGS])
    assert result.exit_code == 0, result.output
    return out


class TestParsing:
    def test_range(self):
        assert list(parse_range("0:1:3")) == [0.0, 0.5, 1.0]
        assert list(parse_range("0.1, 0.9")) == [0.1, 0.9]

    def test_bad_range(self):
        with pytest.raises(InputError):
            parse_range("a:b")
        with pytest.raises(InputError):
            parse_range("")

    def test_assignments(self):
        grid = parse_assignments(["length=5,10", "log_diameter=-2:-1:3"])
        assert list(grid["length"]) == [5.0, 10.0]
        assert len(grid["log_diameter"]) == 3
        with pytest.raises(InputError):
            parse_assignments(["length"])


class TestFit:
    def test_weibull_report(self, weibull_report):
        report = json.loads(weibull_report.read_text())
        assert report["family"] == "weibull"
        assert report["theta_fixed"] is True
        assert [e["name"] for e in report["estimates"]] == ["intercept", "length", "log_diameter", "alpha"]
        assert report["n"] == 225
        assert report["response_column"] == "strength"
        assert "lr" not in report

    def test_missing_column(self, tmp_path, fixture_path):
        result = runner.invoke(app, ["fit", "-i", str(fixture_path), "-o", str(tmp_path / "x.json"), "-r", "nope"])
        assert result.exit_code == EXIT_INPUT
        assert "nope" in result.output

    def test_unknown_family(self, tmp_path, fixture_path):
        out = tmp_path / "x.json"
        result = runner.invoke(app, ["fit", "-i", str(fixture_path), "-o", str(out), "--family", "zeta", *FIT_ARGS])
        assert result.exit_code == EXIT_INPUT
        assert not out.exists()

    def test_missing_file(self, tmp_path):
        result = runner.invoke(app, ["fit", "-i", str(tmp_path / "none.csv"), "-o", str(tmp_path / "x.json")])
        assert result.exit_code == EXIT_INPUT

    def test_headerless_file(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n")
        result = runner.invoke(app, ["fit", "-i", str(path), "-o", str(tmp_path / "x.json")])
        assert result.exit_code == EXIT_INPUT

    @pytest.mark.slow
    def test_geometric_report(self, geometric_report):
        report = json.loads(geometric_report.read_text())
        assert report["converged"] is True
        assert report["label"] == "EWG"
        assert report["estimates"][-1]["name"] == "theta"
        assert report["lr"]["statistic"] >= 0.0
        assert report["profile"]


class TestQuantiles:
    def test_grid_from_report(self, tmp_path, weibull_report):
        out = tmp_path / "q.csv"
        args = ["quantiles", "--report", str(weibull_report), "-o", str(out), "--xi", "0.1,0.5"]
        args += ["--at", "length=5,35", "--at", "log_diameter=-2,-1"]
        result = runner.invoke(app, args)
        assert result.exit_code == 0, result.output
        rows = _rows(out)
        assert rows[0] == ["xi", "length", "log_diameter", "q_hat", "var_q", "ci_low", "ci_high"]
        assert len(rows) == 1 + 2 * 2 * 2
        for row in rows[1:]:
            low, point, high = float(row[5]), float(row[3]), float(row[6])
            assert low <= point <= high

    def test_missing_covariate_values(self, tmp_path, weibull_report):
        args = ["quantiles", "--report", str(weibull_report), "-o", str(tmp_path / "q.csv"), "--at", "length=5"]
        assert runner.invoke(app, args).exit_code == EXIT_INPUT

    def test_xi_out_of_range(self, tmp_path, weibull_report):
        args = ["quantiles", "--report", str(weibull_report), "-o", str(tmp_path / "q.csv"), "--xi", "0.5,1.5"]
        args += ["--at", "length=5", "--at", "log_diameter=-1"]
        assert runner.invoke(app, args).exit_code == EXIT_INPUT


class TestResiduals:
    def test_from_report(self, tmp_path, fixture_path, weibull_report):
        out, qq, summary = tmp_path / "r.csv", tmp_path / "qq.csv", tmp_path / "ad.json"
        args = ["residuals", "-i", str(fixture_path), "--report", str(weibull_report), "-o", str(out)]
        args += ["--qq-output", str(qq), "--summary", str(summary)]
        result = runner.invoke(app, args)
        assert result.exit_code == 0, result.output
        rows = _rows(out)
        assert rows[0] == ["index", "y", "cdf", "residual", "clipped"]
        assert len(rows) == 226
        assert len(_rows(qq)) == 226
        payload = json.loads(summary.read_text())
        assert payload["n"] == 225
        assert 0.0 <= payload["ad_p_value"] <= 1.0


class TestCurves:
    def test_default_grid(self, tmp_path):
        out = tmp_path / "c.csv"
        result = runner.invoke(app, ["curves", "-o", str(out), "--family", "geometric", "--alpha", "2", "--theta=-0.5"])
        assert result.exit_code == 0, result.output
        rows = _rows(out)
        assert rows[0] == ["y", "pdf", "cdf", "survival", "hazard"]
        assert len(rows) == 61
        for row in rows[1:]:
            assert float(row[2]) + float(row[3]) == pytest.approx(1.0)

    def test_theta_outside_domain(self, tmp_path):
        result = runner.invoke(app, ["curves", "-o", str(tmp_path / "c.csv"), "--family", "geometric", "--theta", "1.5"])
        assert result.exit_code == EXIT_INPUT

    def test_weibull_takes_no_theta(self, tmp_path):
        result = runner.invoke(app, ["curves", "-o", str(tmp_path / "c.csv"), "--family", "weibull", "--theta", "0.5"])
        assert result.exit_code == EXIT_INPUT


class TestSimulate:
    def test_seeded(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (first, second):
            args = ["simulate", "-o", str(out), "-n", "100", "--seed", "9", "--family", "poisson", "--theta", "1.2"]
            assert runner.invoke(app, args).exit_code == 0
        assert first.read_text() == second.read_text()
        assert len(_rows(first)) == 101

    def test_compositional(self, tmp_path):
        out = tmp_path / "s.csv"
        args = ["simulate", "-o", str(out), "-n", "50", "--family", "geometric", "--theta=-0.4", "--compositional"]
        assert runner.invoke(app, args).exit_code == 0
        assert all(float(row[0]) > 0 for row in _rows(out)[1:])

    def test_compositional_unsupported(self, tmp_path):
        args = ["simulate", "-o", str(tmp_path / "s.csv"), "--family", "binomial", "--m", "3", "--theta=-0.4"]
        assert runner.invoke(app, [*args, "--compositional"]).exit_code == EXIT_INPUT

    def test_regression_from_report(self, tmp_path, fixture_path, weibull_report):
        out = tmp_path / "s.csv"
        args = ["simulate", "-o", str(out), "--report", str(weibull_report), "-i", str(fixture_path)]
        result = runner.invoke(app, args)
        assert result.exit_code == 0, result.output
        assert len(_rows(out)) == 226


class TestProfileAndCompare:
    def test_profile(self, tmp_path, fixture_path):
        out = tmp_path / "p.csv"
        args = ["profile", "-i", str(fixture_path), "-o", str(out), "--family", "geometric", "--grid=-0.4,0,0.4"]
        result = runner.invoke(app, [*args, *FIT_ARGS, "--threads", "2"])
        assert result.exit_code == 0, result.output
        rows = _rows(out)
        assert rows[0] == ["theta", "loglik"]
        assert [float(r[0]) for r in rows[1:]] == [-0.4, 0.0, 0.4]

    def test_profile_rejects_weibull(self, tmp_path, fixture_path):
        args = ["profile", "-i", str(fixture_path), "-o", str(tmp_path / "p.csv"), "--family", "weibull", "-g", "0.1"]
        assert runner.invoke(app, [*args, *FIT_ARGS]).exit_code == EXIT_INPUT

    @pytest.mark.slow
    def test_compare(self, tmp_path, fixture_path):
        out = tmp_path / "cmp.json"
        args = ["compare", "-i", str(fixture_path), "-o", str(out), "--family", "geometric", *FIT_ARGS]
        result = runner.invoke(app, args)
        assert result.exit_code == 0, result.output
        rows = json.loads(out.read_text())
        assert [row["label"] for row in rows][0] == "Weibull"

    def test_compare_unknown_family(self, tmp_path, fixture_path):
        args = ["compare", "-i", str(fixture_path), "-o", str(tmp_path / "cmp.json"), "--family", "zeta", *FIT_ARGS]
        assert runner.invoke(app, args).exit_code == EXIT_INPUT


@pytest.mark.slow
class TestGeometricRoundTrip:
    def test_quantiles(self, tmp_path, geometric_report):
        out = tmp_path / "q.csv"
        args = ["quantiles", "--report", str(geometric_report), "-o", str(out), "--xi", "0.1,0.5,0.9"]
        args += ["--at", "length=5,35", "--at", "log_diameter=-2"]
        result = runner.invoke(app, args)
        assert result.exit_code == 0, result.output
        rows = _rows(out)
        assert len(rows) == 1 + 3 * 2
        for length in ("5.0", "35.0"):
            points = [float(row[3]) for row in rows[1:] if float(row[1]) == float(length)]
            assert points == sorted(points)

    def test_residuals(self, tmp_path, geometric_report):
        out, summary = tmp_path / "r.csv", tmp_path / "ad.json"
        args = ["residuals", "-i", str(FIXTURE), "--report", str(geometric_report), "-o", str(out), "--summary", str(summary)]
        result = runner.invoke(app, args)
        assert result.exit_code == 0, result.output
        assert len(_rows(out)) == 226
        payload = json.loads(summary.read_text())
        assert 0.0 <= payload["ad_p_value"] <= 1.0

    def test_simulate(self, tmp_path, geometric_report):
        out = tmp_path / "s.csv"
        args = ["simulate", "-o", str(out), "--report", str(geometric_report), "-i", str(FIXTURE), "--seed", "4"]
        result = runner.invoke(app, args)
        assert result.exit_code == 0, result.output
        rows = _rows(out)
        assert len(rows) == 226
        assert all(float(row[0]) > 0 for row in rows[1:])
