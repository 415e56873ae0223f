"""ewps command-line application."""
import typer

from ewps.cli import distribution, fitting, inference
from ewps.config import settings


def create_app() -> typer.Typer:
    app = typer.Typer(
        name="ewps",
        help=f"{settings.APP_NAME} {settings.APP_VERSION}: extended Weibull power series regression",
        no_args_is_help=True,
        add_completion=False,
    )
    app.command("fit")(fitting.run_fit)
    app.command("profile")(fitting.run_profile)
    app.command("compare")(fitting.run_compare)
    app.command("quantiles")(inference.run_quantiles)
    app.command("residuals")(inference.run_residuals)
    app.command("curves")(distribution.run_curves)
    app.command("simulate")(distribution.run_simulate)

    @app.callback()
    def root() -> None:
        """Fit, diagnose and simulate EWPS lifetime regression models."""

    return app


app = create_app()
