"""Multi-start grid search with Nelder-Mead refinement."""

import logging
from collections.abc import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 17
DEFAULT_N_STARTS = 5

# Nelder-Mead stopping tolerances on the free coordinates and the objective.
REFINE_XATOL = 1e-10
REFINE_FATOL = 1e-13
REFINE_MAXITER = 4000


class InfeasibleBoundsError(ValueError):
    """No point inside the bounds has a finite primary score."""


class ParameterSearch:
    """Maximizes a lexicographic score over a box.

    `score` maps an (n, dims) array of points to an (n, k) array of keys;
    rows are compared lexicographically and a primary key of -inf marks an
    infeasible point. Coordinates whose low and high bounds coincide are
    pinned and never varied. The reduction over candidates is by key order
    only, so the result does not depend on evaluation order.
    """

    def __init__(
        self,
        score: Callable[[np.ndarray], np.ndarray],
        bounds: Sequence[tuple[float, float]],
        grid_points: int = DEFAULT_GRID_POINTS,
        n_starts: int = DEFAULT_N_STARTS,
    ):
        if grid_points < 2:
            raise ValueError(f"'grid_points': {grid_points} must be >= 2")
        if n_starts < 1:
            raise ValueError(f"'n_starts': {n_starts} must be >= 1")
        self.score = score
        self.bounds = [(float(lo), float(hi)) for lo, hi in bounds]
        self.grid_points = grid_points
        self.n_starts = n_starts
        self._free = [i for i, (lo, hi) in enumerate(self.bounds) if hi > lo]
        self._pinned = np.array([lo for lo, _ in self.bounds])

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def _embed(self, free_coords: np.ndarray) -> np.ndarray:
        """Place free coordinates (n, len(free)) into full points (n, dims)."""
        points = np.tile(self._pinned, (free_coords.shape[0], 1))
        points[:, self._free] = free_coords
        return points

    def _keys(self, free_coords: np.ndarray) -> np.ndarray:
        return np.asarray(self.score(self._embed(free_coords)), dtype=float)

    @staticmethod
    def _order(keys: np.ndarray) -> np.ndarray:
        """Indices sorting rows best-first; ties keep their original order."""
        # lexsort sorts ascending by the last key given, so feed keys reversed
        # and negated.
        return np.lexsort(tuple(-keys[:, j] for j in reversed(range(keys.shape[1]))))

    # ------------------------------------------------------------------
    # Stages
    # ------------------------------------------------------------------

    def _grid_starts(self) -> tuple[np.ndarray, np.ndarray]:
        """Best n_starts grid points and their keys, best-first."""
        axes = [np.linspace(*self.bounds[i], self.grid_points) for i in self._free]
        if not axes:
            empty = np.empty((1, 0))
            return empty, self._keys(empty)

        best_coords = None
        best_keys = None
        # Sweep one slab of the first free axis at a time to bound memory.
        for value in axes[0]:
            mesh = np.meshgrid(*axes[1:], indexing="ij")
            slab = np.column_stack(
                [np.full(mesh[0].size if mesh else 1, value)] + [m.ravel() for m in mesh]
            )
            keys = self._keys(slab)
            if best_coords is not None:
                slab = np.vstack([best_coords, slab])
                keys = np.vstack([best_keys, keys])
            keep = self._order(keys)[: self.n_starts]
            best_coords, best_keys = slab[keep], keys[keep]

        logger.debug("Grid of %d^%d points reduced to %d starts", self.grid_points, len(axes), len(best_coords))
        return best_coords, best_keys

    def _refine(self, start: np.ndarray) -> np.ndarray:
        """Nelder-Mead on the negated primary key, clipped to the bounds."""

        def objective(x: np.ndarray) -> float:
            primary = self._keys(x.reshape(1, -1))[0, 0]
            return -primary if np.isfinite(primary) else np.inf

        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            bounds=[self.bounds[i] for i in self._free],
            options={"xatol": REFINE_XATOL, "fatol": REFINE_FATOL, "maxiter": REFINE_MAXITER},
        )
        return np.asarray(result.x, dtype=float)

    def ranked(self) -> np.ndarray:
        """All feasible candidates (grid starts and refined points) as full
        points, best-first.

        Raises:
            InfeasibleBoundsError: If no grid point has a finite primary score.
        """
        starts, start_keys = self._grid_starts()
        feasible = np.isfinite(start_keys[:, 0])
        if not feasible.any():
            raise InfeasibleBoundsError(
                "No feasible point inside the bounds (every grid point has an infeasible score)"
            )

        candidates = [starts[feasible]]
        if self._free:
            for start in starts[feasible]:
                candidates.append(self._refine(start).reshape(1, -1))
        coords = np.vstack(candidates)
        keys = self._keys(coords)
        order = [i for i in self._order(keys) if np.isfinite(keys[i, 0])]
        return self._embed(coords[order])

    def run(self) -> np.ndarray:
        """Return the best full point.

        Raises:
            InfeasibleBoundsError: If no grid point has a finite primary score.
        """
        return self.ranked()[0]
