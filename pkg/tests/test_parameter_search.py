import numpy as np
import pytest

from src.search.parameter_search import InfeasibleBoundsError, ParameterSearch


def peak_at(center):
    center = np.asarray(center)

    def score(points):
        return -np.sum((points - center) ** 2, axis=1, keepdims=True)

    return score


def test_finds_interior_maximum():
    search = ParameterSearch(peak_at([0.31, -0.42]), bounds=[(0.0, 1.0), (-1.0, 1.0)], grid_points=9)
    np.testing.assert_allclose(search.run(), [0.31, -0.42], atol=1e-6)


def test_respects_bounds():
    search = ParameterSearch(peak_at([2.0, 0.5]), bounds=[(0.0, 1.0), (0.0, 1.0)], grid_points=5)
    best = search.run()
    assert 0.0 <= best[0] <= 1.0
    assert best[0] == pytest.approx(1.0, abs=1e-6)
    assert best[1] == pytest.approx(0.5, abs=1e-6)


def test_pinned_coordinates_stay_put():
    search = ParameterSearch(peak_at([0.2, 0.8, 0.4]), bounds=[(0.0, 1.0), (0.3, 0.3), (0.0, 1.0)], grid_points=7)
    best = search.run()
    assert best[1] == 0.3
    np.testing.assert_allclose(best[[0, 2]], [0.2, 0.4], atol=1e-6)


def test_all_pinned_returns_the_point():
    search = ParameterSearch(peak_at([0.0]), bounds=[(0.5, 0.5)])
    assert search.run().tolist() == [0.5]


def test_secondary_key_breaks_ties():
    def score(points):
        return np.column_stack([np.zeros(len(points)), points[:, 0]])

    search = ParameterSearch(score, bounds=[(0.0, 2.0)], grid_points=5, n_starts=2)
    assert search.run()[0] == pytest.approx(2.0)


def test_infeasible_everywhere_raises():
    def score(points):
        return np.full((len(points), 1), -np.inf)

    with pytest.raises(InfeasibleBoundsError):
        ParameterSearch(score, bounds=[(0.0, 1.0), (0.0, 1.0)], grid_points=4).run()


def test_infeasible_region_is_avoided():
    def score(points):
        x = points[:, 0]
        return np.where(x < 0.5, -np.inf, -((x - 0.7) ** 2))[:, None]

    best = ParameterSearch(score, bounds=[(0.0, 1.0)], grid_points=11).run()
    assert best[0] == pytest.approx(0.7, abs=1e-6)


@pytest.mark.parametrize("kwargs", [{"grid_points": 1}, {"n_starts": 0}])
def test_rejects_bad_settings(kwargs):
    with pytest.raises(ValueError):
        ParameterSearch(peak_at([0.0]), bounds=[(0.0, 1.0)], **kwargs)


def test_ranked_is_feasible_and_best_first():
    def score(points):
        x = points[:, 0]
        return np.where(x < 0.5, -np.inf, -((x - 0.7) ** 2))[:, None]

    search = ParameterSearch(score, bounds=[(0.0, 1.0)], grid_points=11, n_starts=3)
    ranked = search.ranked()
    keys = score(ranked)[:, 0]
    assert np.all(np.isfinite(keys))
    assert np.all(np.diff(keys) <= 0)
    assert ranked[0, 0] == pytest.approx(0.7, abs=1e-6)
    np.testing.assert_array_equal(search.run(), ranked[0])
