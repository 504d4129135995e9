"""Resolve --config values to bundled files in the configs/ directory."""

from pathlib import Path

import click

PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent

CONFIGS_DIR = PROJECT_ROOT / "configs"

CONFIG_EXTENSION = ".json"


def resolve_config(name_or_path: str | None, configs_dir: Path = CONFIGS_DIR) -> Path | None:
    """Resolve a config argument to a file path.

    Args:
        name_or_path: An existing file path, or the base name of a file in
            configs/ (e.g. 'published' for configs/published.json). None means
            "use the built-in defaults".
        configs_dir: Directory searched for bundled configs.

    Returns:
        The resolved Path, or None when no config was given.
    """
    if name_or_path is None:
        return None

    direct = Path(name_or_path)
    if direct.is_file():
        return direct

    candidate = configs_dir / f"{name_or_path}{CONFIG_EXTENSION}"
    if candidate.is_file():
        return candidate

    available = ", ".join(sorted(p.stem for p in configs_dir.glob(f"*{CONFIG_EXTENSION}"))) or "none"
    raise click.UsageError(
        f"Config not found: {name_or_path}\n"
        f"Pass a path to a JSON file or place it at: configs/{name_or_path}{CONFIG_EXTENSION} "
        f"(bundled: {available})"
    )
