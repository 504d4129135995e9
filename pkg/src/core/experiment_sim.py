"""Monte Carlo of the heralded polarization runs and their estimators.

A run measures two data sets. The A setting projects onto |H> (PBS at
theta = 0); the B setting projects onto P(beta/2), whose reflected port
realizes P((beta + pi)/2). In both, p_hat is the fraction of detected
heralded gates in which the monitored (transmitted) output fired:

    <A>   = a p0            <A^2> = a^2 p0
    <B>   = b [(1+r)/2 p1 + (1-r)/2 (1-p1)]
    <B^2> = b^2 [r p1 + (1-r)^2/4]

Gates are simulated in fixed-size chunks; chunk i of stream s draws from
default_rng([seed, s, i]), so results do not depend on the worker count.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from uncertainties import ufloat

from src.core.alicki_test import significance
from src.core.photon_source import DetectionModel, PhotonNumberDist, PurityStats
from src.core.qubit_core import ObservableParams, QubitState, born_probability

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 1 << 18

# Wilson intervals are one standard deviation wide.
WILSON_Z = 1.0
# Counts this close to 0 or N switch the binomial uncertainty to Wilson.
WILSON_MARGIN = 10

# Stream ids; each owns an independent family of chunk generators.
_STREAM_A = 0
_STREAM_B = 1
_STREAM_A_EMPTY = 2
_STREAM_B_EMPTY = 3
_STREAM_PURITY = 4
_STREAM_PURITY_EMPTY = 5


class DegenerateStatisticsError(ValueError):
    """Not enough events to form an estimate."""


@dataclass(frozen=True)
class EstimateWithUncertainty:
    """A value with its one-sigma standard uncertainty."""
    value: float
    std_uncertainty: float

    def __post_init__(self):
        if not self.std_uncertainty >= 0.0:
            raise ValueError(f"'std_uncertainty': {self.std_uncertainty} must be >= 0")

    @classmethod
    def from_ufloat(cls, quantity) -> EstimateWithUncertainty:
        return cls(float(quantity.nominal_value), float(quantity.std_dev))

    def to_ufloat(self, tag: str | None = None):
        return ufloat(self.value, self.std_uncertainty, tag)

    def __str__(self) -> str:
        """Value with the uncertainty in parentheses on its last digits, e.g. 0.0461(10)."""
        if self.std_uncertainty == 0.0 or not math.isfinite(self.value):
            return f"{self.value:.6g}"
        return f"{self.to_ufloat():.2uS}"


@dataclass(frozen=True)
class SettingTally:
    """Counts collected at one waveplate setting.

    `total` counts detected heralded gates (either PBS output fired) and
    `transmitted` those in which the monitored output fired. `accidentals`
    are detected gates in empty coincidence windows, assumed to split
    evenly between the two outputs. `heralds` is run bookkeeping that the
    tally file does not carry, so it takes no part in equality.
    """
    setting_rad: float
    total: int
    transmitted: int
    accidentals: int = 0
    heralds: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.total < 0 or self.transmitted < 0 or self.accidentals < 0:
            raise ValueError(f"Tally counts must be >= 0 (setting {self.setting_rad})")
        if self.transmitted > self.total:
            raise ValueError(
                f"Transmitted counts {self.transmitted} exceed total {self.total} (setting {self.setting_rad})"
            )

    @property
    def reflected(self) -> int:
        """Detected gates in which only the reflected output fired."""
        return self.total - self.transmitted

    def net_counts(self) -> tuple[float, float]:
        """(transmitted, total) with the accidentals removed.

        Raises:
            ValueError: If the accidentals exceed what they are subtracted from.
        """
        if self.accidentals > self.total or self.accidentals / 2.0 > self.transmitted:
            raise ValueError(
                f"Accidentals {self.accidentals} exceed the raw counts "
                f"(total {self.total}, transmitted {self.transmitted}) at setting {self.setting_rad}"
            )
        return self.transmitted - self.accidentals / 2.0, float(self.total - self.accidentals)

    def __add__(self, other: SettingTally) -> SettingTally:
        return SettingTally(
            setting_rad=self.setting_rad,
            total=self.total + other.total,
            transmitted=self.transmitted + other.transmitted,
            accidentals=self.accidentals + other.accidentals,
            heralds=self.heralds + other.heralds,
        )


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines one simulated measurement run."""
    n_heralds_a: int
    n_heralds_b: int
    source: PhotonNumberDist
    detection: DetectionModel
    state: QubitState
    params: ObservableParams
    seed: int
    jitter_rad: float = 0.0
    workers: int = 1
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self):
        errors = []
        if self.n_heralds_a <= 0:
            errors.append(f"'n_heralds_a': {self.n_heralds_a} must be > 0")
        if self.n_heralds_b <= 0:
            errors.append(f"'n_heralds_b': {self.n_heralds_b} must be > 0")
        if self.seed < 0:
            errors.append(f"'seed': {self.seed} must be >= 0")
        if self.jitter_rad < 0.0:
            errors.append(f"'jitter_rad': {self.jitter_rad} must be >= 0")
        if self.workers < 1:
            errors.append(f"'workers': {self.workers} must be >= 1")
        if self.chunk_size < 1:
            errors.append(f"'chunk_size': {self.chunk_size} must be >= 1")
        if errors:
            raise ValueError("Invalid run configuration:\n" + "\n".join(f"  - {e}" for e in errors))


@dataclass(frozen=True)
class RunResult:
    """Estimated expectation values of one run, as tabulated."""
    mean_A: EstimateWithUncertainty
    sq_A: EstimateWithUncertainty
    mean_B: EstimateWithUncertainty
    sq_B: EstimateWithUncertainty
    mean_diff: EstimateWithUncertainty
    square_diff: EstimateWithUncertainty
    significance: float
    p_hat_a: EstimateWithUncertainty
    p_hat_b: EstimateWithUncertainty
    tallies: tuple[SettingTally, SettingTally]


@dataclass(frozen=True)
class PurityTally:
    """Gates of the two-detector measurement binned by number of clicks."""
    counts: tuple[int, int, int]
    accidentals: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        if len(self.counts) != 3 or len(self.accidentals) != 3:
            raise ValueError("Purity tallies need exactly three click bins (0, 1, 2)")
        if any(c < 0 for c in self.counts) or any(c < 0 for c in self.accidentals):
            raise ValueError("Purity tally counts must be >= 0")

    @property
    def gates(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class MeasuredPurity:
    """Estimated click marginals and ratios; a ratio is None when undefined."""
    theta0: EstimateWithUncertainty
    theta1: EstimateWithUncertainty
    theta2: EstimateWithUncertainty
    gamma1: EstimateWithUncertainty | None
    gamma2: EstimateWithUncertainty | None
    ratio: EstimateWithUncertainty | None

    def as_stats(self) -> PurityStats:
        return PurityStats.from_thetas(self.theta0.value, self.theta1.value, self.theta2.value)


@dataclass(frozen=True)
class PurityRunResult:
    raw: MeasuredPurity
    subtracted: MeasuredPurity
    tally: PurityTally


# ----------------------------------------------------------------------
# Estimators
# ----------------------------------------------------------------------

def binomial_estimate(successes: float, trials: float) -> EstimateWithUncertainty:
    """Proportion with its one-sigma uncertainty.

    Wald's sqrt(p(1-p)/n) is used except within WILSON_MARGIN counts of
    either extreme, where the half-width of the Wilson score interval
    replaces it so the uncertainty never collapses to zero.

    Raises:
        DegenerateStatisticsError: If there are no trials.
    """
    if trials <= 0:
        raise DegenerateStatisticsError("Zero detected events: the proportion is undefined")
    p_hat = successes / trials
    if WILSON_MARGIN <= successes <= trials - WILSON_MARGIN:
        return EstimateWithUncertainty(p_hat, math.sqrt(p_hat * (1.0 - p_hat) / trials))

    z = WILSON_Z
    denominator = 1.0 + z * z / trials
    center = (p_hat + z * z / (2.0 * trials)) / denominator
    margin = (z / denominator) * math.sqrt(p_hat * (1.0 - p_hat) / trials + z * z / (4.0 * trials * trials))
    lower = max(0.0, center - margin)
    upper = min(1.0, center + margin)
    return EstimateWithUncertainty(p_hat, (upper - lower) / 2.0)


def estimate_from_tallies(tallies: Sequence[SettingTally], params: ObservableParams) -> RunResult:
    """Turn the A-setting and B-setting tallies into the tabulated quantities.

    Args:
        tallies: (A tally, B tally) in that order.
        params: The operator parameters the run was taken with.

    Raises:
        ValueError: If there are not exactly two tallies or accidentals
            exceed the raw counts.
        DegenerateStatisticsError: If a setting has no net detected events.
    """
    if len(tallies) != 2:
        raise ValueError(f"Expected two tallies (A setting, B setting), got {len(tallies)}")
    tally_a, tally_b = tallies

    net_a = tally_a.net_counts()
    net_b = tally_b.net_counts()
    if tally_a.accidentals or tally_b.accidentals:
        logger.debug("Subtracted accidentals: A=%d B=%d", tally_a.accidentals, tally_b.accidentals)
    try:
        p_hat_a = binomial_estimate(*net_a)
        p_hat_b = binomial_estimate(*net_b)
    except DegenerateStatisticsError as e:
        raise DegenerateStatisticsError(f"{e} (settings {tally_a.setting_rad}, {tally_b.setting_rad})") from e

    # Independent data sets; <B> and <B^2> stay correlated through p1.
    p0 = p_hat_a.to_ufloat("setting_A")
    p1 = p_hat_b.to_ufloat("setting_B")
    a, b, r = params.a, params.b, params.r
    mean_a = a * p0
    sq_a = a * a * p0
    mean_b = b * ((1.0 + r) / 2.0 * p1 + (1.0 - r) / 2.0 * (1.0 - p1))
    sq_b = b * b * (r * p1 + (1.0 - r) ** 2 / 4.0)

    square_diff = EstimateWithUncertainty.from_ufloat(sq_b - sq_a)
    sigma = significance(square_diff) if square_diff.std_uncertainty > 0.0 else math.nan
    return RunResult(
        mean_A=EstimateWithUncertainty.from_ufloat(mean_a),
        sq_A=EstimateWithUncertainty.from_ufloat(sq_a),
        mean_B=EstimateWithUncertainty.from_ufloat(mean_b),
        sq_B=EstimateWithUncertainty.from_ufloat(sq_b),
        mean_diff=EstimateWithUncertainty.from_ufloat(mean_b - mean_a),
        square_diff=square_diff,
        significance=sigma,
        p_hat_a=p_hat_a,
        p_hat_b=p_hat_b,
        tallies=(tally_a, tally_b),
    )


def _count_uncertainty(count: int, gates: int) -> float:
    """Poisson sqrt(count), floored near zero by the Wilson half-width in counts."""
    if count >= WILSON_MARGIN:
        return math.sqrt(count)
    return max(math.sqrt(count), gates * binomial_estimate(count, gates).std_uncertainty)


def _purity_from_counts(counts, accidentals, gates: int) -> MeasuredPurity:
    """Marginals as binomial proportions; ratios from Poisson counts.

    The count ratios are scale-free, so propagating independent Poisson
    uncertainties gives the multinomial delta-method result. Bins below
    WILSON_MARGIN never get a zero uncertainty.
    """
    k0, k1, k2 = (ufloat(c, _count_uncertainty(c, gates)) for c in counts)
    if accidentals is None:
        acc1 = acc2 = 0.0
    else:
        _, acc1, acc2 = (ufloat(c, _count_uncertainty(c, gates)) for c in accidentals)
    net1 = k1 - acc1
    net2 = k2 - acc2
    net0 = k0 + acc1 + acc2

    thetas = [binomial_estimate(q.nominal_value, gates) for q in (net0, net1, net2)]
    gamma1 = net1 / net0 if net0.nominal_value > 0 else None
    gamma2 = net2 / net1 if net1.nominal_value > 0 else None
    ratio = net2 * net0 / net1**2 if gamma1 is not None and gamma2 is not None else None

    def wrap(q):
        return None if q is None else EstimateWithUncertainty.from_ufloat(q)

    return MeasuredPurity(*thetas, gamma1=wrap(gamma1), gamma2=wrap(gamma2), ratio=wrap(ratio))


def estimate_purity(tally: PurityTally) -> PurityRunResult:
    """Raw and background-subtracted purity estimates of one tally.

    Background subtraction removes the empty-window 1- and 2-click gates
    from their bins and returns them to the 0-click bin.

    Raises:
        DegenerateStatisticsError: If the tally holds no gates.
        ValueError: If accidentals exceed the counts they are removed from.
    """
    if tally.gates <= 0:
        raise DegenerateStatisticsError("Zero gates in the purity tally")
    for clicks in (1, 2):
        if tally.accidentals[clicks] > tally.counts[clicks]:
            raise ValueError(
                f"Accidentals {tally.accidentals[clicks]} exceed the {clicks}-click counts {tally.counts[clicks]}"
            )
    return PurityRunResult(
        raw=_purity_from_counts(tally.counts, None, tally.gates),
        subtracted=_purity_from_counts(tally.counts, tally.accidentals, tally.gates),
        tally=tally,
    )


# ----------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------

def _chunk_sizes(n_gates: int, chunk_size: int) -> list[int]:
    full, rest = divmod(n_gates, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _run_chunks(config: RunConfig, stream: int, n_gates: int, chunk_fn) -> np.ndarray:
    """Sum chunk_fn(rng, size) over all chunks of one stream."""
    sizes = _chunk_sizes(n_gates, config.chunk_size)

    def work(index: int) -> np.ndarray:
        rng = np.random.default_rng([config.seed, stream, index])
        return np.asarray(chunk_fn(rng, sizes[index]), dtype=np.int64)

    if config.workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(i) for i in range(len(sizes))]
    logger.debug("Stream %d: %d gates in %d chunks", stream, n_gates, len(sizes))
    return np.sum(parts, axis=0)


def _dark_clicks(rng: np.random.Generator, dark_prob: float, size: int) -> np.ndarray:
    if dark_prob <= 0.0:
        return np.zeros(size, dtype=bool)
    return rng.random(size) < dark_prob


def _pbs_chunk(config: RunConfig, setting: float):
    """Chunk sampler returning (detected, transmitted) at one PBS setting."""
    detection = config.detection

    def sample(rng: np.random.Generator, size: int):
        photons = config.source.sample(rng, size)
        angle = setting
        if config.jitter_rad > 0.0:
            angle = setting + rng.normal(0.0, config.jitter_rad, size)
        p_transmit = born_probability(angle, config.state)
        n_t = rng.binomial(photons, np.clip(p_transmit, 0.0, 1.0))
        click_t = rng.binomial(n_t, detection.tau_a) > 0
        click_r = rng.binomial(photons - n_t, detection.tau_b) > 0
        click_t |= _dark_clicks(rng, detection.dark_prob, size)
        click_r |= _dark_clicks(rng, detection.dark_prob, size)
        return np.count_nonzero(click_t | click_r), np.count_nonzero(click_t)

    return sample


def _pbs_empty_chunk(config: RunConfig):
    """Chunk sampler counting detected gates in empty windows."""
    dark = config.detection.dark_prob

    def sample(rng: np.random.Generator, size: int):
        fired = _dark_clicks(rng, dark, size) | _dark_clicks(rng, dark, size)
        return (np.count_nonzero(fired),)

    return sample


def _measure_setting(config: RunConfig, setting: float, n_heralds: int, stream: int, empty_stream: int) -> SettingTally:
    total, transmitted = _run_chunks(config, stream, n_heralds, _pbs_chunk(config, setting))
    accidentals = 0
    if config.detection.dark_prob > 0.0:
        (accidentals,) = _run_chunks(config, empty_stream, n_heralds, _pbs_empty_chunk(config))
    return SettingTally(
        setting_rad=setting,
        total=int(total),
        transmitted=int(transmitted),
        accidentals=int(accidentals),
        heralds=n_heralds,
    )


def simulate_run(config: RunConfig) -> RunResult:
    """Simulate both settings and estimate the tabulated quantities.

    Raises:
        DegenerateStatisticsError: If a setting records no detected events.
    """
    tally_a = _measure_setting(config, 0.0, config.n_heralds_a, _STREAM_A, _STREAM_A_EMPTY)
    tally_b = _measure_setting(config, config.params.beta / 2.0, config.n_heralds_b, _STREAM_B, _STREAM_B_EMPTY)
    logger.info(
        "Run seed=%d: A %d/%d, B %d/%d transmitted/detected",
        config.seed, tally_a.transmitted, tally_a.total, tally_b.transmitted, tally_b.total,
    )
    return estimate_from_tallies((tally_a, tally_b), config.params)


def _splitter_chunk(config: RunConfig):
    """Chunk sampler binning gates by clicks behind the 50:50-type splitter."""
    detection = config.detection

    def sample(rng: np.random.Generator, size: int):
        photons = config.source.sample(rng, size)
        toward_a = rng.binomial(photons, detection.split_p)
        click_a = rng.binomial(toward_a, detection.tau_a) > 0
        click_b = rng.binomial(photons - toward_a, detection.tau_b) > 0
        click_a |= _dark_clicks(rng, detection.dark_prob, size)
        click_b |= _dark_clicks(rng, detection.dark_prob, size)
        return np.bincount(click_a.astype(np.int64) + click_b, minlength=3)

    return sample


def _splitter_empty_chunk(config: RunConfig):
    dark = config.detection.dark_prob

    def sample(rng: np.random.Generator, size: int):
        clicks = _dark_clicks(rng, dark, size).astype(np.int64) + _dark_clicks(rng, dark, size)
        return np.bincount(clicks, minlength=3)

    return sample


def purity_run(config: RunConfig, n_gates: int | None = None) -> PurityRunResult:
    """Simulate the two-detector splitting measurement.

    Args:
        config: Run settings; source, detection (including split_p) and seed
            are used.
        n_gates: Heralded gates to simulate (defaults to n_heralds_a).

    Raises:
        DegenerateStatisticsError: If no gates are simulated.
    """
    n_gates = config.n_heralds_a if n_gates is None else n_gates
    if n_gates <= 0:
        raise DegenerateStatisticsError(f"'n_gates': {n_gates} must be > 0")
    counts = _run_chunks(config, _STREAM_PURITY, n_gates, _splitter_chunk(config))
    accidentals = np.zeros(3, dtype=np.int64)
    if config.detection.dark_prob > 0.0:
        accidentals = _run_chunks(config, _STREAM_PURITY_EMPTY, n_gates, _splitter_empty_chunk(config))
    tally = PurityTally(
        counts=tuple(int(c) for c in counts),
        accidentals=tuple(int(c) for c in accidentals),
    )
    logger.info("Purity run seed=%d: click bins %s", config.seed, tally.counts)
    return estimate_purity(tally)
