"""Run orchestration: load inputs, simulate or import, save tallies."""

from pathlib import Path

import click

from src.core.config_loader import ExperimentConfig
from src.core.experiment_sim import PurityRunResult, RunResult, estimate_purity, purity_run, simulate_run
from src.core.photon_source import (
    PurityStats,
    SourceDiagnosis,
    SourceKind,
    UndefinedRatioError,
    fit_source,
    ideal_closed_form,
    poisson_closed_form,
)
from src.core.tally_io import parse_purity_tallies, write_tallies

OUTPUT_DIR = Path("output")


def default_tallies_path(config: ExperimentConfig) -> Path:
    """output/<config name>-tallies.csv"""
    stem = config.name.strip().replace(" ", "_") or "run"
    return OUTPUT_DIR / f"{stem}-tallies.csv"


def simulate_experiment(config: ExperimentConfig, tallies_path: str | Path | None = None) -> tuple[RunResult, Path]:
    """Simulate the A and B settings of a config and save the raw tallies.

    Args:
        config: Resolved experiment config (seed overrides already applied).
        tallies_path: CSV destination (default: output/<name>-tallies.csv).

    Returns:
        The run result and the path the tallies were written to.
    """
    run_config = config.run_config()
    click.echo(f"Simulating run: {config.name}", err=True)
    click.echo(
        f"Heralds: A {run_config.n_heralds_a} | B {run_config.n_heralds_b} | "
        f"seed {run_config.seed} | workers {run_config.workers}",
        err=True,
    )

    result = simulate_run(run_config)

    tallies_path = Path(tallies_path) if tallies_path is not None else default_tallies_path(config)
    click.echo(f"Writing tallies to {tallies_path}...", err=True)
    write_tallies(result.tallies, tallies_path)
    click.echo(f"Done! Significance {result.significance:.1f} sigma", err=True)
    return result, tallies_path


def measure_purity(config: ExperimentConfig) -> PurityRunResult:
    """Imported purity tallies when the config names them, else a simulation."""
    if config.purity_tallies is not None:
        click.echo(f"Importing purity tallies: {config.purity_tallies}", err=True)
        return estimate_purity(parse_purity_tallies(config.purity_tallies))

    click.echo(f"Simulating purity run: {config.name} ({config.n_gates} gates, seed {config.seed})", err=True)
    return purity_run(config.run_config(), n_gates=config.n_gates)


def theory_columns(config: ExperimentConfig) -> tuple[PurityStats | None, PurityStats | None, float, float]:
    """Closed-form Poisson and ideal-source columns at the config's mu and tau.

    Returns:
        (poisson, ideal, mu, tau); a column is None where its ratios are undefined.
    """
    tau = (config.detection.tau_a + config.detection.tau_b) / 2.0
    mu = config.source.mu if config.source.kind is SourceKind.POISSON else 0.1
    try:
        poisson = poisson_closed_form(mu, tau)
    except UndefinedRatioError:
        poisson = None
    try:
        ideal = ideal_closed_form(tau)
    except UndefinedRatioError:
        ideal = None
    return poisson, ideal, mu, tau


def diagnose(result: PurityRunResult, quoted_gammas: tuple[float, float] | None = None) -> list[SourceDiagnosis]:
    """fit_source for both measured columns, skipping undefined ones.

    Quoted (gamma1, gamma2) values, when given, are diagnosed last.
    """
    columns = [("without background subtracted", result.raw), ("background subtracted", result.subtracted)]
    diagnoses = []
    for label, measured in columns:
        try:
            diagnoses.append(fit_source(measured.as_stats(), label=label))
        except ValueError:
            continue
    if quoted_gammas is not None:
        diagnoses.append(fit_source(PurityStats.from_gammas(*quoted_gammas), label="quoted gammas"))
    return diagnoses
