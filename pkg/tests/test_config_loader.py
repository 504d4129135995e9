import math

import click
import pytest

from src.core.alicki_test import PUBLISHED_PARAMS, PUBLISHED_STATE
from src.core.config_loader import (
    build_config,
    build_search_settings,
    load_config,
    load_search_settings,
)
from src.core.config_resolver import resolve_config
from src.core.photon_source import SourceKind


def test_defaults_are_the_published_point():
    config = load_config()
    assert config.params == PUBLISHED_PARAMS
    assert config.state == PUBLISHED_STATE
    assert config.source.kind is SourceKind.IDEAL_SINGLE
    assert config.seed == 42
    assert config.output_format == "table"
    assert config.sigma_threshold == 3.0


def test_degree_keys_are_converted():
    config = build_config({"params.beta_deg": 40.0, "state.psi_deg": -55.0, "run.jitter_deg": 1.0})
    assert config.params.beta == pytest.approx(2 * math.pi / 9)
    assert config.state.psi == pytest.approx(-11 * math.pi / 36)
    assert config.jitter_rad == pytest.approx(math.radians(1.0))


def test_degree_and_radian_variants_conflict():
    with pytest.raises(ValueError, match="not both"):
        build_config({"params.beta_deg": 40.0, "params.beta_rad": 0.7})


def test_errors_are_collected_into_one_message():
    with pytest.raises(ValueError) as excinfo:
        build_config({"params.r": 1.5, "detection.tau_a": -0.1, "colour": "red"}, "bad.json")
    message = str(excinfo.value)
    assert "Invalid config 'bad.json'" in message
    assert "'params.r': 1.5 is outside the allowed range [0.0, 1.0]" in message
    assert "'detection.tau_a'" in message
    assert "'colour': unknown key" in message


@pytest.mark.parametrize(
    "data, field",
    [
        ({"params.a": 0}, "params.a"),
        ({"source.kind": "laser"}, "source.kind"),
        ({"source.mu": -1.0}, "source.mu"),
        ({"source.kind": "empirical"}, "source.kind"),
        ({"source.probabilities": [0.5, 0.6]}, "source.probabilities"),
        ({"purity.gammas": [0.0, 0.1]}, "purity.gammas"),
        ({"purity.gammas": [0.05]}, "purity.gammas"),
        ({"detection.dark_prob": 1.0}, "detection.dark_prob"),
        ({"run.n_heralds_a": 0}, "run.n_heralds_a"),
        ({"run.n_gates": 2.5}, "run.n_gates"),
        ({"run.seed": -3}, "run.seed"),
        ({"run.jitter_rad": -0.1}, "run.jitter_rad"),
        ({"output.format": "xml"}, "output.format"),
        ({"report.sigma_threshold": 0}, "report.sigma_threshold"),
    ],
)
def test_invalid_fields_are_named(data, field):
    with pytest.raises(ValueError, match=f"'{field}'"):
        build_config(data)


def test_poisson_and_empirical_sources():
    poisson = build_config({"source.kind": "poisson", "source.mu": 0.3}).source
    assert poisson.kind is SourceKind.POISSON
    assert poisson.mu == 0.3
    empirical = build_config({"source.kind": "empirical", "source.probabilities": [0.1, 0.9]}).source
    assert empirical.probabilities == (0.1, 0.9)


def test_source_file_resolves_relative_to_config(tmp_path, write_config):
    (tmp_path / "dist.csv").write_text("n,probability\n1,0.9\n2,0.1\n", encoding="utf-8")
    path = write_config({"source.kind": "empirical", "source.file": "dist.csv"})
    config = load_config(path)
    assert config.source.kind is SourceKind.EMPIRICAL
    assert config.source.probabilities == (0.0, 0.9, 0.1)


def test_purity_tallies_resolve_relative_to_config(tmp_path, write_config):
    config = load_config(write_config({"purity.tallies": "counts.csv"}))
    assert config.purity_tallies == tmp_path / "counts.csv"


def test_load_config_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValueError, match="Invalid JSON"):
        load_config(bad)
    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ValueError, match="JSON object"):
        load_config(listed)


def test_overrides_and_run_config():
    config = load_config().with_overrides(seed=7, output_format="csv")
    assert config.seed == 7
    assert config.output_format == "csv"
    run = config.run_config(chunk_size=1000)
    assert run.seed == 7
    assert run.chunk_size == 1000
    assert config.run_config(seed=9).seed == 9


def test_bundled_configs_load(configs_dir):
    for path in sorted(configs_dir.glob("*.json")):
        if path.stem.startswith("bounds"):
            load_search_settings(path)
        else:
            load_config(path)


def test_search_settings_defaults():
    settings = load_search_settings()
    assert settings.bounds.beta == (0.0, math.pi)
    assert settings.state_free is True
    assert settings.grid_points == 17
    assert settings.n_starts == 5


def test_search_settings_pinned_published_point(configs_dir):
    settings = load_search_settings(configs_dir / "bounds_published.json")
    assert settings.bounds.a == (0.74, 0.74)
    assert settings.bounds.beta[0] == pytest.approx(2 * math.pi / 9)
    assert settings.state_free is False
    assert settings.psi_rad == pytest.approx(-11 * math.pi / 36)


@pytest.mark.parametrize(
    "data, message",
    [
        ({"bounds.a": [1.0, 0.5]}, "exceeds"),
        ({"bounds.r": [0.1]}, "pair"),
        ({"optimize.state_free": False}, "required"),
        ({"optimize.grid_points": 1}, "optimize.grid_points"),
        ({"optimize.n_starts": 0}, "optimize.n_starts"),
        ({"bounds.gamma": [0, 1]}, "unknown key"),
    ],
)
def test_invalid_bounds(data, message):
    with pytest.raises(ValueError, match=message):
        build_search_settings(data)


def test_resolve_config_by_name_and_path(configs_dir, write_config):
    assert resolve_config(None) is None
    assert resolve_config("published") == configs_dir / "published.json"
    path = write_config({})
    assert resolve_config(str(path)) == path


def test_resolve_config_miss_is_a_usage_error():
    with pytest.raises(click.UsageError, match="configs/nope.json"):
        resolve_config("nope")


def test_quoted_purity_gammas(configs_dir):
    config = load_config(configs_dir / "purity_published_tallies.json")
    assert config.purity_gammas == (0.0578, 0.0013)
    assert load_config().purity_gammas is None
