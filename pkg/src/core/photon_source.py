"""Photon-number statistics of the heralded source and its purity ratios.

A heralded pulse with n photons is split toward two click detectors A and
B (probability p toward A). theta(k|n) is the probability that exactly k
detectors fire; averaging over the photon-number distribution gives
theta(k), and gamma1 = theta(1)/theta(0), gamma2 = theta(2)/theta(1)
measure how far the source is from an ideal single-photon source.
Dark counts are not part of this layer; see experiment_sim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats

# Empirical probabilities must sum to 1 within this.
EMPIRICAL_SUM_TOL = 1e-6

# Ratio gamma2/gamma1 of a Poisson source with equal detector efficiencies.
POISSON_RATIO = 0.25
# Measured ratios below this sit closer to the ideal source (0) than to Poisson.
DOMINANCE_THRESHOLD = POISSON_RATIO / 2.0


class UndefinedRatioError(ValueError):
    """A gamma ratio has a zero denominator."""


class SourceKind(str, Enum):
    IDEAL_SINGLE = "ideal"
    POISSON = "poisson"
    EMPIRICAL = "empirical"


class SourceVerdict(str, Enum):
    SINGLE_PHOTON_DOMINATED = "SINGLE_PHOTON_DOMINATED"
    POISSON_CONSISTENT = "POISSON_CONSISTENT"


@dataclass(frozen=True)
class PhotonNumberDist:
    """Distribution P(n) of photons in a heralded pulse."""
    kind: SourceKind
    mu: float = 0.0
    probabilities: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind is SourceKind.POISSON and not (math.isfinite(self.mu) and self.mu >= 0.0):
            raise ValueError(f"'mu': {self.mu} must be a finite mean >= 0")
        if self.kind is SourceKind.EMPIRICAL:
            probs = np.asarray(self.probabilities, dtype=float)
            if probs.size == 0:
                raise ValueError("'probabilities': an empirical distribution needs at least one entry")
            if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
                raise ValueError("'probabilities': entries must be finite and >= 0")
            if abs(probs.sum() - 1.0) > EMPIRICAL_SUM_TOL:
                raise ValueError(f"'probabilities': entries sum to {probs.sum():.6g}, expected 1")

    @classmethod
    def ideal(cls) -> PhotonNumberDist:
        return cls(SourceKind.IDEAL_SINGLE)

    @classmethod
    def poisson(cls, mu: float) -> PhotonNumberDist:
        return cls(SourceKind.POISSON, mu=mu)

    @classmethod
    def empirical(cls, probabilities) -> PhotonNumberDist:
        return cls(SourceKind.EMPIRICAL, probabilities=tuple(float(p) for p in probabilities))

    def truncation(self) -> int:
        """Largest photon number carried in sums over P(n)."""
        if self.kind is SourceKind.IDEAL_SINGLE:
            return 1
        if self.kind is SourceKind.POISSON:
            return max(50, math.ceil(self.mu + 10.0 * math.sqrt(self.mu) + 10.0))
        return len(self.probabilities) - 1

    def pmf(self, n_max: int | None = None) -> np.ndarray:
        """P(0..n_max); mass lost to truncation is renormalized away."""
        n_max = self.truncation() if n_max is None else n_max
        n = np.arange(n_max + 1)
        if self.kind is SourceKind.IDEAL_SINGLE:
            probs = (n == 1).astype(float)
        elif self.kind is SourceKind.POISSON:
            probs = stats.poisson.pmf(n, self.mu)
        else:
            probs = np.zeros(n_max + 1)
            given = np.asarray(self.probabilities[: n_max + 1], dtype=float)
            probs[: given.size] = given
        total = probs.sum()
        if total <= 0.0:
            raise ValueError(f"No probability mass within n <= {n_max}")
        return probs / total

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Photon numbers for `size` heralded pulses."""
        if self.kind is SourceKind.IDEAL_SINGLE:
            return np.ones(size, dtype=np.int64)
        if self.kind is SourceKind.POISSON:
            return rng.poisson(self.mu, size)
        probs = self.pmf()
        return rng.choice(probs.size, size=size, p=probs)


@dataclass(frozen=True)
class DetectionModel:
    """Two click detectors behind a splitter, plus dark counts per gate."""
    tau_a: float = 1.0
    tau_b: float = 1.0
    split_p: float = 0.5
    dark_prob: float = 0.0

    def __post_init__(self):
        errors = []
        for name in ("tau_a", "tau_b", "split_p"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                errors.append(f"'{name}': {value} is outside the allowed range [0, 1]")
        if not 0.0 <= self.dark_prob < 1.0:
            errors.append(f"'dark_prob': {self.dark_prob} is outside the allowed range [0, 1)")
        if errors:
            raise ValueError("Invalid detection model:\n" + "\n".join(f"  - {e}" for e in errors))


@dataclass(frozen=True)
class PurityStats:
    """Click-number marginals theta(0..2) and the derived gamma ratios."""
    theta0: float
    theta1: float
    theta2: float
    gamma1: float
    gamma2: float
    ratio: float

    @classmethod
    def from_thetas(cls, theta0: float, theta1: float, theta2: float) -> PurityStats:
        """Build the ratios from marginals.

        Raises:
            UndefinedRatioError: If theta0 or theta1 is zero.
        """
        if theta0 <= 0.0:
            raise UndefinedRatioError("gamma1 is undefined: theta(0) = 0")
        if theta1 <= 0.0:
            raise UndefinedRatioError("gamma2 is undefined: theta(1) = 0")
        gamma1 = theta1 / theta0
        gamma2 = theta2 / theta1
        return cls(theta0, theta1, theta2, gamma1, gamma2, gamma2 / gamma1)

    @classmethod
    def from_gammas(cls, gamma1: float, gamma2: float) -> PurityStats:
        """Rebuild the marginals of published gamma values."""
        if not gamma1 > 0.0:
            raise ValueError(f"'gamma1': {gamma1} must be > 0")
        if gamma2 < 0.0:
            raise ValueError(f"'gamma2': {gamma2} must be >= 0")
        theta0 = 1.0 / (1.0 + gamma1 + gamma1 * gamma2)
        theta1 = gamma1 * theta0
        return cls(theta0, theta1, gamma2 * theta1, gamma1, gamma2, gamma2 / gamma1)


@dataclass(frozen=True)
class SourceDiagnosis:
    """Measured ratios compared against the Poisson and ideal-source models."""
    label: str
    gamma1: float
    gamma2: float
    ratio: float
    mu_tau: float
    poisson_gamma2: float
    dominance: float
    verdict: SourceVerdict


def theta_given_n_binomial(n: int, model: DetectionModel) -> tuple[float, float, float]:
    """theta(k|n) as explicit sums over the binomial split of n photons."""
    m = np.arange(n + 1)
    weights = stats.binom.pmf(m, n, model.split_p)
    miss_a = (1.0 - model.tau_a) ** m
    miss_b = (1.0 - model.tau_b) ** (n - m)
    theta0 = float(np.sum(miss_a * miss_b * weights))
    theta1 = float(np.sum(((1.0 - miss_a) * miss_b + miss_a * (1.0 - miss_b)) * weights))
    theta2 = float(np.sum((1.0 - miss_a) * (1.0 - miss_b) * weights))
    return theta0, theta1, theta2


def theta_given_n(n: int, model: DetectionModel) -> tuple[float, float, float]:
    """Probabilities that 0, 1 or 2 detectors fire for an n-photon pulse."""
    if n < 0:
        raise ValueError(f"'n': {n} must be >= 0")
    if n == 0:
        return 1.0, 0.0, 0.0
    if n == 1:
        fire = model.split_p * model.tau_a + (1.0 - model.split_p) * model.tau_b
        return 1.0 - fire, fire, 0.0
    if model.split_p != 0.5:
        return theta_given_n_binomial(n, model)

    both_miss = (1.0 - (model.tau_a + model.tau_b) / 2.0) ** n
    a_miss = (1.0 - model.tau_a / 2.0) ** n
    b_miss = (1.0 - model.tau_b / 2.0) ** n
    return both_miss, a_miss + b_miss - 2.0 * both_miss, 1.0 - a_miss - b_miss + both_miss


def purity_stats(dist: PhotonNumberDist, model: DetectionModel) -> PurityStats:
    """Average theta(k|n) over P(n) and form the gamma ratios.

    Raises:
        UndefinedRatioError: If theta(0) or theta(1) vanishes.
    """
    probs = dist.pmf()
    table = np.array([theta_given_n(n, model) for n in range(probs.size)])
    theta0, theta1, theta2 = (float(v) for v in probs @ table)
    return PurityStats.from_thetas(theta0, theta1, theta2)


def poisson_closed_form(mu: float, tau: float) -> PurityStats:
    """Theory column for a Poisson source and two detectors of efficiency tau."""
    half = math.exp(-tau * mu / 2.0)
    full = math.exp(-tau * mu)
    theta1 = 2.0 * (half - full)
    if theta1 <= 0.0:
        raise UndefinedRatioError("gamma2 is undefined: theta(1) = 0")
    gamma1 = 2.0 * math.expm1(tau * mu / 2.0)
    gamma2 = math.expm1(tau * mu / 2.0) / 2.0
    return PurityStats(
        theta0=full,
        theta1=theta1,
        theta2=1.0 - 2.0 * half + full,
        gamma1=gamma1,
        gamma2=gamma2,
        ratio=POISSON_RATIO,
    )


def ideal_closed_form(tau: float) -> PurityStats:
    """Theory column for a source that always emits exactly one photon."""
    return PurityStats.from_thetas(1.0 - tau, tau, 0.0)


def fit_source(measured: PurityStats, label: str = "measured") -> SourceDiagnosis:
    """Compare measured ratios with a Poisson source of the same gamma1.

    The data fix only the product mu*tau, which is what is reported.

    Raises:
        ValueError: If gamma1 is not a finite positive number.
    """
    gamma1 = measured.gamma1
    if not (math.isfinite(gamma1) and gamma1 > 0.0):
        raise ValueError(f"'gamma1': {gamma1} must lie in (0, inf)")
    ratio = measured.gamma2 / gamma1
    verdict = (
        SourceVerdict.SINGLE_PHOTON_DOMINATED if ratio < DOMINANCE_THRESHOLD
        else SourceVerdict.POISSON_CONSISTENT
    )
    return SourceDiagnosis(
        label=label,
        gamma1=gamma1,
        gamma2=measured.gamma2,
        ratio=ratio,
        mu_tau=2.0 * math.log1p(gamma1 / 2.0),
        poisson_gamma2=gamma1 * POISSON_RATIO,
        dominance=1.0 - ratio / POISSON_RATIO,
        verdict=verdict,
    )
