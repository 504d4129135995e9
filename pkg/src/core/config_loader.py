"""Experiment and search-bounds configuration loading and defaults."""

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from src.core.alicki_test import PUBLISHED_PARAMS, PUBLISHED_STATE, ParameterBounds
from src.core.experiment_sim import DEFAULT_CHUNK_SIZE, RunConfig
from src.core.photon_source import EMPIRICAL_SUM_TOL, DetectionModel, PhotonNumberDist, SourceKind
from src.core.qubit_core import ObservableParams, QubitState

DEFAULTS = {
    "name": "Default",
    "params.a": PUBLISHED_PARAMS.a,
    "params.b": PUBLISHED_PARAMS.b,
    "params.r": PUBLISHED_PARAMS.r,
    "params.beta_rad": PUBLISHED_PARAMS.beta,
    "state.psi_rad": PUBLISHED_STATE.psi,
    "source.kind": "ideal",
    "source.mu": 0.1,
    "source.probabilities": None,
    "source.file": None,                  # two-column "n,probability" text
    "detection.tau_a": 1.0,
    "detection.tau_b": 1.0,
    "detection.split_p": 0.5,
    "detection.dark_prob": 0.0,
    "run.n_heralds_a": 1_000_000,
    "run.n_heralds_b": 1_000_000,
    "run.n_gates": 1_000_000,
    "run.seed": 42,
    "run.workers": 1,
    "run.jitter_rad": 0.0,
    "purity.tallies": None,               # imported "clicks,gates,accidentals" text
    "purity.gammas": None,                # quoted [gamma1, gamma2], diagnosed beside the measurement
    "output.format": "table",
    "report.sigma_threshold": 3.0,
}

BOUNDS_DEFAULTS = {
    "name": "Default bounds",
    "bounds.a": [0.1, 1.5],
    "bounds.b": [0.1, 1.5],
    "bounds.r": [0.0, 1.0],
    "bounds.beta_rad": [0.0, math.pi],
    "bounds.psi_rad": [-math.pi / 2.0, math.pi / 2.0],
    "optimize.state_free": True,
    "optimize.psi_rad": None,
    "optimize.grid_points": 17,
    "optimize.n_starts": 5,
}

OUTPUT_FORMATS = ("table", "csv")


@dataclass
class ExperimentConfig:
    """Resolved experiment settings."""
    name: str
    params: ObservableParams
    state: QubitState
    source: PhotonNumberDist
    detection: DetectionModel
    n_heralds_a: int
    n_heralds_b: int
    n_gates: int
    seed: int
    workers: int = 1
    jitter_rad: float = 0.0
    purity_tallies: Path | None = None
    purity_gammas: tuple[float, float] | None = None
    output_format: str = "table"
    sigma_threshold: float = 3.0

    def run_config(self, seed: int | None = None, chunk_size: int = DEFAULT_CHUNK_SIZE) -> RunConfig:
        """RunConfig for this experiment, with an optional seed override."""
        return RunConfig(
            n_heralds_a=self.n_heralds_a,
            n_heralds_b=self.n_heralds_b,
            source=self.source,
            detection=self.detection,
            state=self.state,
            params=self.params,
            seed=self.seed if seed is None else seed,
            jitter_rad=self.jitter_rad,
            workers=self.workers,
            chunk_size=chunk_size,
        )

    def with_overrides(self, seed: int | None = None, output_format: str | None = None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if output_format is not None:
            changes["output_format"] = output_format
        return replace(self, **changes)


@dataclass
class SearchSettings:
    """Resolved optimizer bounds and settings."""
    name: str
    bounds: ParameterBounds
    state_free: bool
    psi_rad: float | None
    grid_points: int
    n_starts: int


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_count(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _convert_degrees(data: dict, errors: list[str]) -> dict:
    """Map every '<key>_deg' entry to '<key>_rad' in radians."""
    converted = {}
    for key, value in data.items():
        if not key.endswith("_deg"):
            converted[key] = value
            continue
        rad_key = key[: -len("_deg")] + "_rad"
        if rad_key in data:
            errors.append(f"'{key}': give either '{key}' or '{rad_key}', not both")
            continue
        if _is_number(value):
            converted[rad_key] = math.radians(value)
        elif isinstance(value, list) and all(_is_number(v) for v in value):
            converted[rad_key] = [math.radians(v) for v in value]
        elif value is None:
            converted[rad_key] = None
        else:
            errors.append(f"'{key}': must be an angle in degrees")
    return converted


def _check_range(data: dict, key: str, low: float, high: float, errors: list[str], high_open: bool = False) -> None:
    value = data.get(key)
    if value is None:
        return
    upper_ok = value < high if high_open else value <= high
    if not _is_number(value) or not (low <= value and upper_ok):
        bracket = ")" if high_open else "]"
        errors.append(f"'{key}': {value!r} is outside the allowed range [{low}, {high}{bracket}")


def _validate_config(data: dict, filepath) -> None:
    """Raise ValueError with clear messages if config data contains invalid values."""
    errors = []

    unknown = sorted(set(data) - set(DEFAULTS))
    for key in unknown:
        errors.append(f"'{key}': unknown key")

    for key in ("params.a", "params.b"):
        value = data.get(key)
        if value is not None and (not _is_number(value) or value <= 0):
            errors.append(f"'{key}': {value!r} is outside the allowed range (0, inf)")
    _check_range(data, "params.r", 0.0, 1.0, errors)

    for key in ("params.beta_rad", "state.psi_rad", "run.jitter_rad"):
        value = data.get(key)
        if value is not None and not _is_number(value):
            errors.append(f"'{key}': {value!r} must be an angle in radians")
    jitter = data.get("run.jitter_rad")
    if _is_number(jitter) and jitter < 0:
        errors.append(f"'run.jitter_rad': {jitter} is outside the allowed range [0, inf)")

    kind = data.get("source.kind")
    if kind is not None and kind not in [k.value for k in SourceKind]:
        errors.append("'source.kind': must be 'ideal', 'poisson', or 'empirical'")
    mu = data.get("source.mu")
    if mu is not None and (not _is_number(mu) or mu < 0):
        errors.append(f"'source.mu': {mu!r} is outside the allowed range [0, inf)")
    probs = data.get("source.probabilities")
    if probs is not None and (
        not isinstance(probs, list) or not probs or not all(_is_number(p) and p >= 0 for p in probs)
    ):
        errors.append("'source.probabilities': must be a non-empty list of numbers >= 0")
    elif probs is not None and abs(sum(probs) - 1.0) > EMPIRICAL_SUM_TOL:
        errors.append(f"'source.probabilities': entries sum to {sum(probs):.6g}, expected 1")
    if kind == "empirical" and probs is None and data.get("source.file") is None:
        errors.append("'source.kind': 'empirical' needs 'source.probabilities' or 'source.file'")

    gammas = data.get("purity.gammas")
    if gammas is not None and (
        not isinstance(gammas, list) or len(gammas) != 2 or not all(_is_number(g) for g in gammas)
        or not gammas[0] > 0 or gammas[1] < 0
    ):
        errors.append(f"'purity.gammas': {gammas!r} must be [gamma1 > 0, gamma2 >= 0]")

    for key in ("detection.tau_a", "detection.tau_b", "detection.split_p"):
        _check_range(data, key, 0.0, 1.0, errors)
    _check_range(data, "detection.dark_prob", 0.0, 1.0, errors, high_open=True)

    for key in ("run.n_heralds_a", "run.n_heralds_b", "run.n_gates", "run.workers"):
        value = data.get(key)
        if value is not None and (not _is_count(value) or value <= 0):
            errors.append(f"'{key}': {value!r} must be a positive integer")
    seed = data.get("run.seed")
    if seed is not None and (not _is_count(seed) or seed < 0):
        errors.append(f"'run.seed': {seed!r} must be an integer >= 0")

    fmt = data.get("output.format")
    if fmt is not None and fmt not in OUTPUT_FORMATS:
        errors.append("'output.format': must be 'table' or 'csv'")
    threshold = data.get("report.sigma_threshold")
    if threshold is not None and (not _is_number(threshold) or threshold <= 0):
        errors.append(f"'report.sigma_threshold': {threshold!r} is outside the allowed range (0, inf)")

    if errors:
        label = f"config '{filepath}'" if filepath else "config"
        msg = f"Invalid {label}:\n" + "\n".join(f"  - {e}" for e in errors)
        raise ValueError(msg)


def _read_json(filepath: Path, kind: str) -> dict:
    if not filepath.exists():
        raise FileNotFoundError(f"{kind} file not found: {filepath}")
    with open(filepath, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON in {filepath}: {e}")
    if not isinstance(data, dict):
        raise ValueError(f"Expected a JSON object in {filepath}, got {type(data).__name__}")
    return data


def _resolve_relative(value: str | None, filepath: Path | None) -> Path | None:
    """Resolve file references relative to the config's directory."""
    if value is None:
        return None
    path = Path(value)
    if not path.is_absolute() and filepath is not None:
        path = filepath.parent / path
    return path


def _build_source(merged: dict, filepath: Path | None) -> PhotonNumberDist:
    kind = SourceKind(merged["source.kind"])
    if kind is SourceKind.POISSON:
        return PhotonNumberDist.poisson(merged["source.mu"])
    if kind is SourceKind.EMPIRICAL:
        if merged["source.probabilities"] is not None:
            return PhotonNumberDist.empirical(merged["source.probabilities"])
        from src.core.tally_io import parse_distribution
        return parse_distribution(_resolve_relative(merged["source.file"], filepath))
    return PhotonNumberDist.ideal()


def build_config(data: dict, filepath: str | Path | None = None) -> ExperimentConfig:
    """Validate a flat config mapping and build the experiment settings.

    Raises:
        ValueError: If the mapping contains invalid values.
    """
    filepath = Path(filepath) if filepath is not None else None
    errors: list[str] = []
    data = _convert_degrees(data, errors)
    if errors:
        label = f"config '{filepath}'" if filepath else "config"
        raise ValueError(f"Invalid {label}:\n" + "\n".join(f"  - {e}" for e in errors))
    _validate_config(data, filepath)

    merged = {**DEFAULTS, **data}

    return ExperimentConfig(
        name=str(merged["name"]),
        params=ObservableParams(
            a=merged["params.a"], b=merged["params.b"], r=merged["params.r"], beta=merged["params.beta_rad"]
        ),
        state=QubitState(merged["state.psi_rad"]),
        source=_build_source(merged, filepath),
        detection=DetectionModel(
            tau_a=merged["detection.tau_a"],
            tau_b=merged["detection.tau_b"],
            split_p=merged["detection.split_p"],
            dark_prob=merged["detection.dark_prob"],
        ),
        n_heralds_a=merged["run.n_heralds_a"],
        n_heralds_b=merged["run.n_heralds_b"],
        n_gates=merged["run.n_gates"],
        seed=merged["run.seed"],
        workers=merged["run.workers"],
        jitter_rad=merged["run.jitter_rad"],
        purity_tallies=_resolve_relative(merged["purity.tallies"], filepath),
        purity_gammas=None if merged["purity.gammas"] is None else tuple(merged["purity.gammas"]),
        output_format=merged["output.format"],
        sigma_threshold=merged["report.sigma_threshold"],
    )


def load_config(filepath: str | Path | None = None) -> ExperimentConfig:
    """Load an experiment config JSON file with fallbacks to defaults.

    Args:
        filepath: Path to config JSON. If None, returns the default config
            (the published parameter point, ideal source, perfect detection).

    Returns:
        An ExperimentConfig instance with all settings resolved.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the config contains invalid values.
    """
    if filepath is None:
        return build_config({})
    filepath = Path(filepath)
    return build_config(_read_json(filepath, "Config"), filepath)


def _validate_bounds(data: dict, filepath) -> None:
    errors = []

    unknown = sorted(set(data) - set(BOUNDS_DEFAULTS))
    for key in unknown:
        errors.append(f"'{key}': unknown key")

    for key in ("bounds.a", "bounds.b", "bounds.r", "bounds.beta_rad", "bounds.psi_rad"):
        pair = data.get(key)
        if pair is None:
            continue
        if not (isinstance(pair, list) and len(pair) == 2 and all(_is_number(v) for v in pair)):
            errors.append(f"'{key}': must be a [low, high] pair of numbers")
        elif pair[0] > pair[1]:
            errors.append(f"'{key}': low {pair[0]} exceeds high {pair[1]}")

    state_free = data.get("optimize.state_free")
    if state_free is not None and not isinstance(state_free, bool):
        errors.append("'optimize.state_free': must be true or false")
    psi = data.get("optimize.psi_rad")
    if psi is not None and not _is_number(psi):
        errors.append(f"'optimize.psi_rad': {psi!r} must be an angle in radians")
    if state_free is False and psi is None:
        errors.append("'optimize.psi_rad': required when 'optimize.state_free' is false")

    grid = data.get("optimize.grid_points")
    if grid is not None and (not _is_count(grid) or grid < 2):
        errors.append(f"'optimize.grid_points': {grid!r} must be an integer >= 2")
    starts = data.get("optimize.n_starts")
    if starts is not None and (not _is_count(starts) or starts < 1):
        errors.append(f"'optimize.n_starts': {starts!r} must be a positive integer")

    if errors:
        label = f"bounds '{filepath}'" if filepath else "bounds"
        msg = f"Invalid {label}:\n" + "\n".join(f"  - {e}" for e in errors)
        raise ValueError(msg)


def build_search_settings(data: dict, filepath: str | Path | None = None) -> SearchSettings:
    """Validate a flat bounds mapping and build the optimizer settings.

    Raises:
        ValueError: If the mapping contains invalid values.
    """
    errors: list[str] = []
    data = _convert_degrees(data, errors)
    if errors:
        label = f"bounds '{filepath}'" if filepath else "bounds"
        raise ValueError(f"Invalid {label}:\n" + "\n".join(f"  - {e}" for e in errors))
    _validate_bounds(data, filepath)

    merged = {**BOUNDS_DEFAULTS, **data}

    return SearchSettings(
        name=str(merged["name"]),
        bounds=ParameterBounds(
            a=tuple(merged["bounds.a"]),
            b=tuple(merged["bounds.b"]),
            r=tuple(merged["bounds.r"]),
            beta=tuple(merged["bounds.beta_rad"]),
            psi=tuple(merged["bounds.psi_rad"]),
        ),
        state_free=merged["optimize.state_free"],
        psi_rad=merged["optimize.psi_rad"],
        grid_points=merged["optimize.grid_points"],
        n_starts=merged["optimize.n_starts"],
    )


def load_search_settings(filepath: str | Path | None = None) -> SearchSettings:
    """Load an optimizer bounds JSON file with fallbacks to the default box.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the bounds contain invalid values.
    """
    if filepath is None:
        return build_search_settings({})
    filepath = Path(filepath)
    return build_search_settings(_read_json(filepath, "Bounds"), filepath)
