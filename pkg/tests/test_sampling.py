import numpy as np
import pytest
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from hyperinr.numerics import Rng
from hyperinr.sampling import (
    SamplingPlan,
    compose_plan,
    even_1d,
    gaussian_samples,
    poisson_disk,
    uniform_samples,
)


class TestPoissonDisk:
    def test_huge_radius_single_point(self):
        pts = poisson_disk(2, 2.0, Rng(1))
        assert pts.shape == (1, 2)

    @pytest.mark.parametrize("dim,radius", [(1, 0.05), (2, 0.1), (3, 0.25)])
    def test_pairwise_separation(self, dim, radius):
        pts = poisson_disk(dim, radius, Rng(2))
        assert len(pts) >= 2
        assert pdist(pts).min() >= radius

    def test_deterministic(self):
        a = poisson_disk(2, 0.15, Rng(3))
        b = poisson_disk(2, 0.15, Rng(3))
        np.testing.assert_array_equal(a, b)

    def test_statistically_maximal(self):
        # no probe point can be further than radius from every sample
        radius = 0.12
        pts = poisson_disk(2, radius, Rng(4))
        probes = Rng(5).uniform(size=(10000, 2), dtype=np.float64)
        dist, _ = cKDTree(pts).query(probes)
        assert dist.max() < radius

    def test_inside_unit_cube(self):
        pts = poisson_disk(3, 0.2, Rng(6))
        assert pts.min() >= 0.0 and pts.max() <= 1.0


class TestGaussianSamples:
    def test_degenerate_sigma_collapses_to_anchors(self):
        anchors = np.array([[0.25, 0.25], [0.75, 0.75]])
        pts = gaussian_samples(anchors, 1e-9, 40, Rng(7))
        d, _ = cKDTree(anchors).query(pts)
        assert d.max() < 1e-6

    def test_empirical_std(self):
        anchors = np.array([[0.5, 0.5]])
        pts = gaussian_samples(anchors, 0.02, 10000, Rng(8))
        std = pts.std(axis=0)
        np.testing.assert_allclose(std, 0.02, rtol=0.05)

    def test_clamped_at_corner(self):
        anchors = np.array([[0.0, 0.0]])
        pts = gaussian_samples(anchors, 0.3, 500, Rng(9))
        assert pts.min() >= 0.0 and pts.max() <= 1.0


class TestEven1D:
    def test_two_points_are_endpoints(self):
        np.testing.assert_array_equal(even_1d(2), [[0.0], [1.0]])

    def test_spacing_24(self):
        pts = even_1d(24)
        gaps = np.diff(pts[:, 0])
        np.testing.assert_allclose(gaps, 1.0 / 23.0, rtol=1e-12)

    def test_five_points(self):
        np.testing.assert_allclose(even_1d(5)[:, 0], [0.0, 0.25, 0.5, 0.75, 1.0])


class TestComposePlan:
    def test_single_even_strategy_is_even(self):
        plan = SamplingPlan(dim=1, strategies=({"kind": "even_1d", "count": 9},))
        np.testing.assert_array_equal(compose_plan(plan), even_1d(9))

    def test_dedup_repeated_strategy(self):
        plan = SamplingPlan(
            dim=1,
            strategies=(
                {"kind": "even_1d", "count": 5},
                {"kind": "even_1d", "count": 5},
            ),
        )
        assert len(compose_plan(plan)) == 5

    def test_union_of_disjoint_gaussians(self):
        plan = SamplingPlan(
            dim=2,
            strategies=(
                {"kind": "gaussian", "anchors": [[0.1, 0.1]], "sigma": 1e-4, "count": 7},
                {"kind": "gaussian", "anchors": [[0.9, 0.9]], "sigma": 1e-4, "count": 5},
            ),
            seed=11,
        )
        assert len(compose_plan(plan)) == 12

    def test_deterministic_for_seed(self):
        plan = SamplingPlan(
            dim=2, strategies=({"kind": "poisson", "radius": 0.2},), seed=13
        )
        np.testing.assert_array_equal(compose_plan(plan), compose_plan(plan))

    def test_even_requires_dim_one(self):
        with pytest.raises(ValueError):
            SamplingPlan(dim=2, strategies=({"kind": "even_1d", "count": 4},), seed=0)

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError):
            SamplingPlan(dim=1, strategies=({"kind": "sobol", "count": 4},), seed=0)


def test_uniform_samples_shape_and_range():
    pts = uniform_samples(3, 50, Rng(14))
    assert pts.shape == (50, 3)
    assert pts.min() >= 0.0 and pts.max() <= 1.0
