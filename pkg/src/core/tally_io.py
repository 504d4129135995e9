"""Plain-text tally and distribution files: reading, validation and writing."""

import csv
import io
from collections.abc import Sequence
from pathlib import Path

from src.core.experiment_sim import PurityTally, SettingTally
from src.core.photon_source import PhotonNumberDist

TALLY_HEADER = ("setting_rad", "total", "transmitted", "accidentals")
PURITY_HEADER = ("clicks", "gates", "accidentals")
DISTRIBUTION_HEADER = ("n", "probability")


def _read_rows(filepath: Path, header: tuple[str, ...], kind: str) -> list[list[str]]:
    """Return the data rows of a comma-separated file after checking its header."""
    if not filepath.exists():
        raise FileNotFoundError(f"{kind} file not found: {filepath}")

    with open(filepath, "r", encoding="utf-8", newline="") as f:
        rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]

    if not rows:
        raise ValueError(f"Empty {kind.lower()} file: {filepath}")
    found = tuple(cell.strip() for cell in rows[0])
    if found != header:
        raise ValueError(f"Expected header '{','.join(header)}' in {filepath}, got '{','.join(found)}'")

    data = rows[1:]
    for i, row in enumerate(data, start=2):
        if len(row) != len(header):
            raise ValueError(f"Row {i} must have {len(header)} columns in {filepath}")
    return data


def _parse_int(cell: str, column: str, line: int, filepath: Path) -> int:
    try:
        return int(cell.strip())
    except ValueError:
        raise ValueError(f"Row {line} '{column}' must be an integer in {filepath}")


def _parse_float(cell: str, column: str, line: int, filepath: Path) -> float:
    try:
        return float(cell.strip())
    except ValueError:
        raise ValueError(f"Row {line} '{column}' must be a number in {filepath}")


def parse_tallies(filepath: str | Path) -> list[SettingTally]:
    """Load setting tallies written by `write_tallies`.

    Args:
        filepath: Path to the tally file.

    Returns:
        SettingTally objects in file order (A setting first, then B).

    Raises:
        FileNotFoundError: If the file doesn't exist.
        ValueError: If the header, a row or a count is invalid.
    """
    filepath = Path(filepath)
    tallies = []
    for line, row in enumerate(_read_rows(filepath, TALLY_HEADER, "Tally"), start=2):
        setting = _parse_float(row[0], "setting_rad", line, filepath)
        total, transmitted, accidentals = (
            _parse_int(cell, column, line, filepath) for cell, column in zip(row[1:], TALLY_HEADER[1:])
        )
        try:
            tallies.append(SettingTally(setting, total, transmitted, accidentals))
        except ValueError as e:
            raise ValueError(f"Row {line} in {filepath}: {e}")
    return tallies


def format_tallies(tallies: Sequence[SettingTally]) -> str:
    """Tally records as CSV text with the standard header."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TALLY_HEADER)
    for tally in tallies:
        writer.writerow([repr(float(tally.setting_rad)), tally.total, tally.transmitted, tally.accidentals])
    return buffer.getvalue()


def write_tallies(tallies: Sequence[SettingTally], filepath: str | Path) -> Path:
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    filepath.write_text(format_tallies(tallies), encoding="utf-8")
    return filepath


def parse_purity_tallies(filepath: str | Path) -> PurityTally:
    """Load two-detector purity tallies, one row per click number 0, 1, 2.

    Raises:
        FileNotFoundError: If the file doesn't exist.
        ValueError: If the rows do not cover clicks 0, 1 and 2 exactly once.
    """
    filepath = Path(filepath)
    counts: dict[int, tuple[int, int]] = {}
    for line, row in enumerate(_read_rows(filepath, PURITY_HEADER, "Purity tally"), start=2):
        clicks, gates, accidentals = (
            _parse_int(cell, column, line, filepath) for cell, column in zip(row, PURITY_HEADER)
        )
        if clicks not in (0, 1, 2):
            raise ValueError(f"Row {line} 'clicks' must be 0, 1 or 2 in {filepath}")
        if clicks in counts:
            raise ValueError(f"Row {line} repeats clicks={clicks} in {filepath}")
        counts[clicks] = (gates, accidentals)

    if sorted(counts) != [0, 1, 2]:
        raise ValueError(f"Purity tallies must list clicks 0, 1 and 2 in {filepath}")
    return PurityTally(
        counts=tuple(counts[k][0] for k in range(3)),
        accidentals=tuple(counts[k][1] for k in range(3)),
    )


def parse_distribution(filepath: str | Path) -> PhotonNumberDist:
    """Load an empirical photon-number distribution from 'n,probability' rows.

    Missing photon numbers get probability zero; the listed probabilities
    must sum to 1.

    Raises:
        FileNotFoundError: If the file doesn't exist.
        ValueError: If a photon number repeats, a probability is negative or
            the probabilities do not sum to 1.
    """
    filepath = Path(filepath)
    entries: dict[int, float] = {}
    for line, row in enumerate(_read_rows(filepath, DISTRIBUTION_HEADER, "Distribution"), start=2):
        n = _parse_int(row[0], "n", line, filepath)
        prob = _parse_float(row[1], "probability", line, filepath)
        if n < 0 or prob < 0:
            raise ValueError(f"Row {line} must have n >= 0 and probability >= 0 in {filepath}")
        if n in entries:
            raise ValueError(f"Row {line} repeats n={n} in {filepath}")
        entries[n] = prob

    if not entries:
        raise ValueError(f"No distribution rows in {filepath}")
    probabilities = [0.0] * (max(entries) + 1)
    for n, prob in entries.items():
        probabilities[n] = prob
    return PhotonNumberDist.empirical(probabilities)
