"""CLI entry point for the nonclassicality test simulator."""

import logging
import math
from contextlib import contextmanager
from pathlib import Path

import click

from src.core.alicki_test import (
    DegenerateWindowError,
    Verdict,
    classify,
    feasibility_window,
    optimize,
    predict,
    scan_states,
)
from src.core.config_loader import load_config, load_search_settings
from src.core.config_resolver import resolve_config
from src.core.experiment_runner import diagnose, measure_purity, simulate_experiment, theory_columns
from src.core.experiment_sim import estimate_from_tallies
from src.core.qubit_core import ObservableParams, QubitState
from src.core.report_renderer import ReportRenderer
from src.core.tally_io import parse_tallies
from src.search.parameter_search import InfeasibleBoundsError

EXIT_VIOLATION = 0
EXIT_NO_VIOLATION = 1

# Settings read back from a tally file must match the config's to this tolerance.
SETTING_TOL = 1e-9


class ConfigError(click.ClickException):
    """Invalid configuration or input; exits like a usage error."""
    exit_code = 2


@contextmanager
def _input_errors():
    """Turn invalid-input exceptions into exit code 2 with the message."""
    try:
        yield
    except (ValueError, FileNotFoundError) as e:
        raise ConfigError(str(e))


def _window_or_none(r: float, beta: float):
    try:
        return feasibility_window(r, beta)
    except DegenerateWindowError:
        return None


def _emit(report: str, out: str | None) -> None:
    if out is None:
        click.echo(report, nl=False)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report, encoding="utf-8")
    click.echo(f"Report saved to {path}", err=True)


config_option = click.option(
    "--config", "config_name", default=None,
    help="Config JSON path, or a name in configs/ (e.g. 'published').",
)
format_option = click.option(
    "--format", "output_format", type=click.Choice(["table", "csv"]), default=None,
    help="Report format (default: the config's output.format).",
)
seed_option = click.option("--seed", type=click.IntRange(min=0), default=None, help="Override run.seed.")


@click.group()
@click.option("--verbose", is_flag=True, default=False, help="Log debug details to stderr.")
def cli(verbose):
    """Predict, simulate and optimize the single-qubit nonclassicality test."""
    if verbose:
        logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
        logging.getLogger("src").setLevel(logging.DEBUG)


@cli.command("predict")
@config_option
@click.option("--a", "a", type=float, default=None, help="Scale of A (overrides params.a).")
@click.option("--b", "b", type=float, default=None, help="Scale of B (overrides params.b).")
@click.option("--r", "r", type=float, default=None, help="Bloch radius of B (overrides params.r).")
@click.option("--beta", type=float, default=None, help="Bloch direction of B (overrides params.beta_rad).")
@click.option("--psi", type=float, default=None, help="State angle from |H> (overrides state.psi_rad).")
@click.option("--degrees", is_flag=True, default=False, help="Read --beta and --psi in degrees.")
@format_option
@click.option("--out", type=click.Path(), default=None, help="Write the report to this file.")
@click.pass_context
def predict_cmd(ctx, config_name, a, b, r, beta, psi, degrees, output_format, out):
    """Exact QM predictions, feasibility window and verdict for one point."""
    with _input_errors():
        config = load_config(resolve_config(config_name))
        base = config.params
        if degrees:
            beta = math.radians(beta) if beta is not None else None
            psi = math.radians(psi) if psi is not None else None
        params = ObservableParams(
            a=base.a if a is None else a,
            b=base.b if b is None else b,
            r=base.r if r is None else r,
            beta=base.beta if beta is None else beta,
        )
    state = QubitState(config.state.psi if psi is None else psi)

    prediction = predict(params, state)
    verdict = classify(prediction)
    renderer = ReportRenderer(output_format or config.output_format)
    report = renderer.render_prediction(
        params, state, prediction, _window_or_none(params.r, params.beta), verdict, scan_states(params)
    )
    _emit(report, out)
    ctx.exit(EXIT_VIOLATION if verdict is Verdict.NONCLASSICAL else EXIT_NO_VIOLATION)


@cli.command("simulate")
@config_option
@seed_option
@format_option
@click.option("--out", type=click.Path(), default=None, help="Tallies CSV path (default: output/<name>-tallies.csv).")
@click.pass_context
def simulate_cmd(ctx, config_name, seed, output_format, out):
    """Monte Carlo of the A and B settings; prints the results table."""
    with _input_errors():
        config = load_config(resolve_config(config_name)).with_overrides(seed=seed, output_format=output_format)
        result, _ = simulate_experiment(config, out)

    report = ReportRenderer(config.output_format).render_run(result, predict(config.params, config.state))
    click.echo(report, nl=False)
    violated = math.isfinite(result.significance) and result.significance >= config.sigma_threshold
    ctx.exit(EXIT_VIOLATION if violated else EXIT_NO_VIOLATION)


@cli.command("analyze")
@config_option
@click.option("--tallies", "tallies_path", required=True, type=click.Path(), help="Tally CSV to analyze.")
@format_option
@click.option("--out", type=click.Path(), default=None, help="Write the report to this file.")
@click.pass_context
def analyze_cmd(ctx, config_name, tallies_path, output_format, out):
    """Estimate the tabulated quantities from imported tallies."""
    with _input_errors():
        config = load_config(resolve_config(config_name)).with_overrides(output_format=output_format)
        tallies = parse_tallies(tallies_path)
        if len(tallies) != 2:
            raise ValueError(f"Expected two tally rows (A setting, B setting) in {tallies_path}, got {len(tallies)}")
        expected = (0.0, config.params.beta / 2.0)
        for tally, setting in zip(tallies, expected):
            if abs(tally.setting_rad - setting) > SETTING_TOL:
                raise ValueError(
                    f"Tally setting {tally.setting_rad} does not match the config's setting {setting} "
                    f"in {tallies_path}"
                )
        result = estimate_from_tallies(tallies, config.params)

    report = ReportRenderer(config.output_format).render_run(result, predict(config.params, config.state))
    _emit(report, out)
    violated = math.isfinite(result.significance) and result.significance >= config.sigma_threshold
    ctx.exit(EXIT_VIOLATION if violated else EXIT_NO_VIOLATION)


@cli.command("purity")
@config_option
@seed_option
@format_option
@click.option("--out", type=click.Path(), default=None, help="Write the report to this file.")
def purity_cmd(config_name, seed, output_format, out):
    """Source purity table: closed forms beside simulated or imported measurements."""
    with _input_errors():
        config = load_config(resolve_config(config_name)).with_overrides(seed=seed, output_format=output_format)
        result = measure_purity(config)

    poisson, ideal, mu, tau = theory_columns(config)
    report = ReportRenderer(config.output_format).render_purity(
        poisson,
        ideal,
        result.raw,
        result.subtracted,
        diagnose(result, config.purity_gammas),
        poisson_label=f"Poisson (mu={mu:g}, tau={tau:g})",
        ideal_label=f"ideal single photon (tau={tau:g})",
    )
    _emit(report, out)


@cli.command("optimize")
@config_option
@format_option
@click.option("--out", type=click.Path(), default=None, help="Write the report to this file.")
@click.pass_context
def optimize_cmd(ctx, config_name, output_format, out):
    """Search the bounds for the deepest violation of the classical bound."""
    with _input_errors():
        settings = load_search_settings(resolve_config(config_name))
        click.echo(f"Searching: {settings.name} ({settings.grid_points} points per free axis)", err=True)
        try:
            optimum = optimize(
                bounds=settings.bounds,
                state_free=settings.state_free,
                psi=settings.psi_rad,
                grid_points=settings.grid_points,
                n_starts=settings.n_starts,
            )
        except InfeasibleBoundsError as e:
            click.echo(f"Error: {e}", err=True)
            ctx.exit(EXIT_NO_VIOLATION)

    params = optimum.params
    verdict = classify(optimum.prediction)
    report = ReportRenderer(output_format or "table").render_optimum(
        optimum, _window_or_none(params.r, params.beta), verdict
    )
    _emit(report, out)
    ctx.exit(EXIT_VIOLATION if verdict is Verdict.NONCLASSICAL else EXIT_NO_VIOLATION)


if __name__ == "__main__":
    cli()
