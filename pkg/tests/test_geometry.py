"""
Geometry: regions, point processes, wall/tree intersection and forbidden zones.
"""
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from iabplan.errors import DegenerateSegmentError, InfeasibleRegionError, ParameterError
from iabplan.geometry import (
    BlockerGeometry,
    ForbiddenZones,
    PointProcessParams,
    Region,
    TreeLine,
    Wall,
    is_los,
    los_matrix,
    sample_blockers,
    sample_feasible_points,
    sample_forbidden_zones,
    sample_instance,
    sample_ppp,
    sample_uniform_disk,
    segments_array,
    tree_crossings,
)


def _brute_force_hit(a, b, seg) -> bool:
    """Parametric segment intersection, independent of the orientation test."""
    (px, py), (qx, qy) = a, b
    (sx0, sy0), (sx1, sy1) = seg
    rx, ry = qx - px, qy - py
    ux, uy = sx1 - sx0, sy1 - sy0
    denom = rx * uy - ry * ux
    if denom == 0:
        return False
    t = ((sx0 - px) * uy - (sy0 - py) * ux) / denom
    u = ((sx0 - px) * ry - (sy0 - py) * rx) / denom
    return 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0


class TestRegion:
    def test_unit_area_radius(self):
        region = Region.from_area_km2(1.0)
        assert region.radius == pytest.approx(math.sqrt(1e6 / math.pi))
        assert region.area_km2 == pytest.approx(1.0)

    def test_rejects_non_positive_radius(self):
        with pytest.raises(ParameterError):
            Region(radius=0.0)

    def test_clamp_projects_onto_boundary(self):
        region = Region(radius=10.0)
        out = region.clamp(np.array([[20.0, 0.0], [1.0, 1.0]]))
        assert_allclose(out, [[10.0, 0.0], [1.0, 1.0]])


class TestPointProcess:
    def test_negative_density_rejected(self):
        with pytest.raises(ParameterError):
            PointProcessParams(lambda_u=-1.0)
        with pytest.raises(ParameterError):
            sample_ppp(Region(radius=10.0), -1.0, np.random.default_rng(0))

    def test_zero_density_is_empty(self):
        assert sample_ppp(Region(radius=10.0), 0.0, np.random.default_rng(0)).shape == (0, 2)

    def test_points_stay_in_disk(self):
        region = Region(radius=50.0, center=(10.0, -5.0))
        pts = sample_uniform_disk(region, 2000, np.random.default_rng(1))
        assert region.contains(pts).all()

    def test_uniform_radial_law(self):
        region = Region(radius=100.0)
        pts = sample_uniform_disk(region, 5000, np.random.default_rng(2))
        # (r / R)^2 is U(0, 1) for a uniform disk
        u = (np.hypot(pts[:, 0], pts[:, 1]) / region.radius) ** 2
        assert stats.kstest(u, "uniform").pvalue > 1e-3

    def test_poisson_count_mean(self):
        region = Region.from_area_km2(1.0)
        rng = np.random.default_rng(3)
        counts = [len(sample_ppp(region, 50.0, rng)) for _ in range(400)]
        assert np.mean(counts) == pytest.approx(50.0, rel=0.05)

    def test_poisson_count_goodness_of_fit(self):
        region = Region.from_area_km2(1.0)
        rng = np.random.default_rng(30)
        counts = np.array([len(sample_ppp(region, 20.0, rng)) for _ in range(2000)])
        upper = np.array([14, 17, 19, 21, 23, 26])
        observed = np.bincount(np.searchsorted(upper, counts, side="left"), minlength=len(upper) + 1)
        cdf = stats.poisson.cdf(upper, 20.0)
        expected = len(counts) * np.diff(np.concatenate([[0.0], cdf, [1.0]]))
        assert stats.chisquare(observed, expected).pvalue > 1e-3

    def test_wall_orientation_is_uniform(self):
        walls = sample_blockers(Region(radius=300.0), 5000.0, 5.0, np.random.default_rng(31))
        angles = np.array([w.orientation for w in walls]) / math.pi
        assert len(angles) > 500
        assert stats.kstest(angles, "uniform").pvalue > 1e-3

    def test_walls_have_requested_length(self):
        walls = sample_blockers(Region(radius=100.0), 2000.0, 5.0, np.random.default_rng(4))
        assert len(walls) > 0
        seg = segments_array(walls)
        assert_allclose(np.hypot(seg[:, 2] - seg[:, 0], seg[:, 3] - seg[:, 1]), 5.0)
        assert all(0.0 <= w.orientation < math.pi for w in walls)

    def test_layers_are_independent_streams(self):
        region = Region.from_area_km2(1.0)
        shapes = BlockerGeometry()
        a = sample_instance(region, PointProcessParams(lambda_u=100.0), shapes, np.random.default_rng(5))
        b = sample_instance(region, PointProcessParams(lambda_u=900.0), shapes, np.random.default_rng(5))
        assert_allclose(a.mbs, b.mbs)
        assert_allclose(a.sbs, b.sbs)
        assert a.n_ues != b.n_ues

    def test_min_mbs_conditioning(self):
        region = Region.from_area_km2(0.05)
        params = PointProcessParams(lambda_m=2.0)
        for seed in range(20):
            inst = sample_instance(region, params, BlockerGeometry(), np.random.default_rng(seed), min_mbs=1)
            assert inst.n_mbs >= 1

    def test_min_mbs_without_density_is_rejected(self):
        with pytest.raises(ParameterError):
            sample_instance(
                Region(radius=100.0),
                PointProcessParams(lambda_m=0.0),
                BlockerGeometry(),
                np.random.default_rng(0),
                min_mbs=1,
            )

    def test_in_leaf_fraction_bounds(self):
        with pytest.raises(ParameterError):
            BlockerGeometry(in_leaf_fraction=1.5)


class TestIntersection:
    def test_crossing_wall_blocks(self):
        wall = Wall(midpoint=(5.0, 0.0), length=4.0, orientation=math.pi / 2)
        assert not is_los((0.0, 0.0), (10.0, 0.0), [wall])

    def test_wall_beside_link_does_not_block(self):
        wall = Wall(midpoint=(5.0, 5.0), length=4.0, orientation=math.pi / 2)
        assert is_los((0.0, 0.0), (10.0, 0.0), [wall])

    def test_touching_endpoint_blocks(self):
        # closed segments: a wall ending exactly on the link counts
        wall = Wall(midpoint=(5.0, 2.0), length=4.0, orientation=math.pi / 2)
        assert not is_los((0.0, 0.0), (10.0, 0.0), [wall])

    def test_degenerate_link(self):
        with pytest.raises(DegenerateSegmentError):
            is_los((1.0, 1.0), (1.0, 1.0), [])

    def test_no_walls_is_los(self):
        assert is_los((0.0, 0.0), (100.0, 3.0), [])

    def test_tree_crossings_returns_crossed_lines(self):
        crossed = TreeLine(midpoint=(5.0, 0.0), length=6.0, orientation=math.pi / 2, in_leaf=True, depth=7.5)
        missed = TreeLine(midpoint=(5.0, 20.0), length=6.0, orientation=math.pi / 2, in_leaf=False, depth=7.5)
        assert tree_crossings((0.0, 0.0), (10.0, 0.0), [crossed, missed]) == [crossed]

    def test_los_matrix_matches_pairwise(self):
        rng = np.random.default_rng(8)
        region = Region(radius=100.0)
        walls = sample_blockers(region, 3000.0, 10.0, rng)
        tx = sample_uniform_disk(region, 4, rng)
        rx = sample_uniform_disk(region, 6, rng)
        matrix = los_matrix(tx, rx, segments_array(walls))
        for i in range(4):
            for j in range(6):
                assert matrix[i, j] == is_los(tuple(tx[i]), tuple(rx[j]), walls)

    @pytest.mark.acceptance
    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(9)
        region = Region(radius=50.0)
        mismatches = 0
        for _ in range(10_000):
            a, b = sample_uniform_disk(region, 2, rng)
            walls = sample_blockers(region, 1500.0, 8.0, rng)[:6]
            expected = not any(_brute_force_hit(tuple(a), tuple(b), w.endpoints) for w in walls)
            if is_los(tuple(a), tuple(b), walls) != expected:
                mismatches += 1
        assert mismatches == 0

    @settings(max_examples=300, deadline=None)
    @given(
        st.tuples(st.integers(-100, 100), st.integers(-100, 100)),
        st.tuples(st.integers(-100, 100), st.integers(-100, 100)),
        st.integers(-100, 100),
        st.integers(-100, 100),
    )
    def test_los_is_symmetric(self, a, b, wx, wy):
        # integer grid and horizontal walls keep every orientation test exact
        assume(a != b)
        wall = Wall(midpoint=(float(wx), float(wy)), length=20.0, orientation=0.0)
        assert is_los(a, b, [wall]) == is_los(b, a, [wall])


class TestForbiddenZones:
    def test_contains_half_open_cells(self):
        zones = ForbiddenZones(cells=np.array([[0.0, 0.0, 10.0, 10.0]]))
        inside = zones.contains(np.array([[0.0, 0.0], [5.0, 5.0], [10.0, 5.0], [-1.0, 5.0]]))
        assert inside.tolist() == [True, True, False, False]

    def test_empty_zones_contain_nothing(self):
        assert not ForbiddenZones().contains(np.array([[1.0, 2.0]])).any()

    def test_sampled_fraction(self):
        region = Region(radius=200.0)
        zones = sample_forbidden_zones(region, 0.4, 50.0, np.random.default_rng(0))
        all_cells = sample_forbidden_zones(region, 1.0, 50.0, np.random.default_rng(0))
        assert len(zones.cells) == round(0.4 * len(all_cells.cells))

    def test_feasible_points_avoid_zones(self):
        region = Region(radius=200.0)
        zones = sample_forbidden_zones(region, 0.5, 50.0, np.random.default_rng(1))
        pts = sample_feasible_points(region, zones, 100, np.random.default_rng(2))
        assert len(pts) == 100
        assert not zones.contains(pts).any()
        assert region.contains(pts).all()

    def test_fully_forbidden_region_is_infeasible(self):
        region = Region(radius=20.0)
        zones = ForbiddenZones(cells=np.array([[-100.0, -100.0, 100.0, 100.0]]))
        with pytest.raises(InfeasibleRegionError):
            sample_feasible_points(region, zones, 1, np.random.default_rng(0), max_rounds=5)
