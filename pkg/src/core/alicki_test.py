"""Evaluation of the single-qubit classicality criterion.

For classical systems, <B> > <A> > 0 over all states forces
<B^2> > <A^2>. A quantum pair (A, B) violates this when the smallest
eigenvalue d_minus of B - A is positive while <B^2> - <A^2> < 0 for some
state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from src.core.qubit_core import (
    ObservableParams,
    QubitState,
    build_A,
    build_B,
    expectation,
    expectation_sq,
    min_eigenvalue,
)

if TYPE_CHECKING:
    from src.core.experiment_sim import EstimateWithUncertainty

logger = logging.getLogger(__name__)

# Tolerance for r = 1, beta = 0 where both window denominators vanish.
_DEGENERATE_TOL = 1e-15

# Search points need d_minus above this fraction of b; on the window edge the
# closed form and the eigensolver disagree in sign at the 1e-16 level.
D_MINUS_MARGIN = 1e-9

DEFAULT_SCAN_POINTS = 1000


class DegenerateWindowError(ValueError):
    """Both feasibility bounds are 0/0 (r = 1, beta = 0)."""


class Verdict(str, Enum):
    NONCLASSICAL = "NONCLASSICAL"
    CONSISTENT_WITH_CLASSICAL = "CONSISTENT_WITH_CLASSICAL"
    INVALID_WITNESS = "INVALID_WITNESS"


@dataclass(frozen=True)
class TestPrediction:
    """Exact quantum values for one (params, state) point."""

    mean_diff: float
    square_diff: float
    d_minus: float

    @property
    def violation(self) -> float:
        """Depth below the classical bound, -square_diff."""
        return -self.square_diff


@dataclass(frozen=True)
class FeasibilityWindow:
    """Open interval of a/b values for which a violating state exists."""
    lower: float
    upper: float

    @property
    def empty(self) -> bool:
        return not self.lower < self.upper

    def contains(self, ratio: float) -> bool:
        return self.lower < ratio < self.upper


@dataclass(frozen=True)
class StateScan:
    """Outcome of scanning psi over [-pi/2, pi/2)."""
    n_points: int
    n_violating: int
    best_psi: float
    best: TestPrediction


class Optimum(NamedTuple):
    params: ObservableParams
    state: QubitState
    prediction: TestPrediction


@dataclass(frozen=True)
class ReferenceColumn:
    """A measured column of the published results table."""
    label: str
    mean_diff: tuple[float, float]
    square_diff: tuple[float, float]
    reported_sigma: float


# Published measurements, kept as reference data only.
REFERENCE_THIS_WORK = ReferenceColumn("this work", (0.0701, 0.0015), (-0.0461, 0.0010), 46.1)
REFERENCE_PREVIOUS_WORK = ReferenceColumn("previous work", (0.058, 0.011), (-0.0403, 0.0066), 9.4)

PUBLISHED_PARAMS = ObservableParams(a=0.74, b=1.2987, r=0.6, beta=2.0 * math.pi / 9.0)
PUBLISHED_STATE = QubitState(psi=-11.0 * math.pi / 36.0)


# ----------------------------------------------------------------------
# Closed forms (scalar or numpy-broadcast)
# ----------------------------------------------------------------------

def mean_diff_closed_form(a, b, r, beta, psi):
    """<B> - <A> for the real state at angle psi."""
    return 0.5 * b * (1.0 + r * np.cos(2.0 * psi - beta)) - 0.5 * a * (1.0 + np.cos(2.0 * psi))


def square_diff_closed_form(a, b, r, beta, psi):
    """<B^2> - <A^2> for the real state at angle psi."""
    return (
        0.25 * b * b * (1.0 + r * r + 2.0 * r * np.cos(2.0 * psi - beta))
        - 0.5 * a * a * (1.0 + np.cos(2.0 * psi))
    )


def d_minus_array(a, b, r, beta):
    radicand = a * a + b * b * r * r - 2.0 * a * b * r * np.cos(beta)
    return 0.5 * (b - a - np.sqrt(np.maximum(radicand, 0.0)))


def d_minus_closed_form(params: ObservableParams) -> float:
    """Smallest eigenvalue of B - A without an eigensolve."""
    a, b, r = params.a, params.b, params.r
    radicand = a * a + b * b * r * r - 2.0 * a * b * r * math.cos(params.beta)
    return 0.5 * (b - a - math.sqrt(max(radicand, 0.0)))


# ----------------------------------------------------------------------
# Test evaluation
# ----------------------------------------------------------------------

def feasibility_window(r: float, beta: float) -> FeasibilityWindow:
    """Bounds on a/b between which the operator pair can violate the criterion.

    Raises:
        ValueError: If r is outside [0, 1].
        DegenerateWindowError: If r = 1 and beta = 0, where both bounds are 0/0.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"'r': {r} is outside the allowed range [0, 1]")
    numerator = 1.0 - r * r
    lower_den = 2.0 * math.sqrt(max(1.0 + r * r - 2.0 * r * math.cos(beta), 0.0))
    upper_den = 2.0 * (1.0 - r * math.cos(beta))
    if lower_den <= _DEGENERATE_TOL and upper_den <= _DEGENERATE_TOL:
        raise DegenerateWindowError(f"Feasibility window is undefined at r={r}, beta={beta}")
    return FeasibilityWindow(lower=numerator / lower_den, upper=numerator / upper_den)


def predict(params: ObservableParams, state: QubitState) -> TestPrediction:
    op_a = build_A(params)
    op_b = build_B(params)
    return TestPrediction(
        mean_diff=expectation(op_b, state) - expectation(op_a, state),
        square_diff=expectation_sq(op_b, state) - expectation_sq(op_a, state),
        d_minus=min_eigenvalue(op_b - op_a),
    )


def classify(prediction: TestPrediction) -> Verdict:
    # square_diff == 0 sits on the classical bound.
    if prediction.d_minus <= 0.0:
        return Verdict.INVALID_WITNESS
    if prediction.square_diff < 0.0:
        return Verdict.NONCLASSICAL
    return Verdict.CONSISTENT_WITH_CLASSICAL


def significance(measured_square_diff: EstimateWithUncertainty) -> float:
    """Standard deviations below the classical bound square_diff >= 0.

    Raises:
        ValueError: If the uncertainty is not positive.
    """
    u = measured_square_diff.std_uncertainty
    if not u > 0.0:
        raise ValueError(f"Significance needs a positive uncertainty, got {u}")
    return -measured_square_diff.value / u


def scan_states(params: ObservableParams, n_points: int = DEFAULT_SCAN_POINTS) -> StateScan:
    """Evaluate square_diff on an even psi grid and report the deepest violation."""
    if n_points < 1:
        raise ValueError(f"'n_points': {n_points} must be >= 1")
    psi = np.linspace(-math.pi / 2.0, math.pi / 2.0, n_points, endpoint=False)
    sq = square_diff_closed_form(params.a, params.b, params.r, params.beta, psi)
    d = d_minus_closed_form(params)
    n_violating = int(np.count_nonzero(sq < 0.0)) if d > 0.0 else 0
    best_psi = float(psi[int(np.argmin(sq))])
    return StateScan(
        n_points=n_points,
        n_violating=n_violating,
        best_psi=best_psi,
        best=predict(params, QubitState(best_psi)),
    )


# ----------------------------------------------------------------------
# Parameter search
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ParameterBounds:
    """Closed [low, high] search ranges; low == high pins a coordinate."""
    a: tuple[float, float] = (0.1, 1.5)
    b: tuple[float, float] = (0.1, 1.5)
    r: tuple[float, float] = (0.0, 1.0)
    beta: tuple[float, float] = (0.0, math.pi)
    psi: tuple[float, float] = (-math.pi / 2.0, math.pi / 2.0)

    NAMES = ("a", "b", "r", "beta", "psi")

    def __post_init__(self):
        errors = []
        for name in self.NAMES:
            low, high = getattr(self, name)
            if not (math.isfinite(low) and math.isfinite(high)):
                errors.append(f"'{name}': bounds must be finite, got [{low}, {high}]")
            elif low > high:
                errors.append(f"'{name}': low {low} exceeds high {high}")
        if self.a[0] <= 0.0:
            errors.append(f"'a': lower bound {self.a[0]} must be > 0")
        if self.b[0] <= 0.0:
            errors.append(f"'b': lower bound {self.b[0]} must be > 0")
        if self.r[0] < 0.0 or self.r[1] > 1.0:
            errors.append(f"'r': bounds [{self.r[0]}, {self.r[1]}] must lie within [0, 1]")
        if errors:
            raise ValueError("Invalid search bounds:\n" + "\n".join(f"  - {e}" for e in errors))

    def as_list(self) -> list[tuple[float, float]]:
        return [getattr(self, name) for name in self.NAMES]

    def with_psi(self, psi: float) -> ParameterBounds:
        return ParameterBounds(a=self.a, b=self.b, r=self.r, beta=self.beta, psi=(psi, psi))


def witness_keys(points: np.ndarray) -> np.ndarray:
    """Lexicographic keys (violation, d_minus, -b) for rows (a, b, r, beta, psi).

    Rows without a violating witness, or with d_minus within D_MINUS_MARGIN * b
    of zero, get -inf in the first key.
    """
    a, b, r, beta, psi = (points[:, i] for i in range(5))
    sq = square_diff_closed_form(a, b, r, beta, psi)
    d = d_minus_array(a, b, r, beta)
    violation = np.where((d > D_MINUS_MARGIN * b) & (sq < 0.0) & (a > 0.0), -sq, -np.inf)
    return np.column_stack([violation, d, -b])


def optimize(
    bounds: ParameterBounds | None = None,
    state_free: bool = True,
    psi: float | None = None,
    grid_points: int = 17,
    n_starts: int = 5,
) -> Optimum:
    """Find the witness with the deepest violation inside the bounds.

    Args:
        bounds: Search ranges (defaults to the wide box around the published point).
        state_free: Optimize psi jointly; otherwise psi is pinned.
        psi: The pinned state angle, required when state_free is False.
        grid_points: Coarse grid points per free axis.
        n_starts: Best grid points refined by Nelder-Mead.

    Raises:
        InfeasibleBoundsError: If no point in the bounds has d_minus > 0 and
            square_diff < 0.
    """
    from src.search.parameter_search import InfeasibleBoundsError, ParameterSearch

    bounds = bounds or ParameterBounds()
    if not state_free:
        if psi is None:
            raise ValueError("A fixed psi is required when state_free is False")
        bounds = bounds.with_psi(psi)

    search = ParameterSearch(
        score=witness_keys,
        bounds=bounds.as_list(),
        grid_points=grid_points,
        n_starts=n_starts,
    )
    # Candidates are re-checked through predict(), the path that is reported.
    for a, b, r, beta, best_psi in search.ranked():
        params = ObservableParams(a=a, b=b, r=r, beta=beta)
        state = QubitState(best_psi)
        prediction = predict(params, state)
        if classify(prediction) is Verdict.NONCLASSICAL:
            logger.info("Optimum a=%.6g b=%.6g r=%.6g beta=%.6g psi=%.6g", a, b, r, beta, best_psi)
            return Optimum(params=params, state=state, prediction=prediction)
        logger.debug("Candidate a=%.6g b=%.6g rejected: %s", a, b, classify(prediction).value)
    raise InfeasibleBoundsError("No candidate inside the bounds passes the exact witness check")
