import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_lab.domain import (Ball, BoxRegion, Cube, SimpleFunction, ball_box_volume,
                               ball_box_volume_bounds, batch_ball_overlaps, batch_cube_overlaps,
                               box_overlap, cell_overlaps, discretize, disk_box_area, distribution,
                               modular, monte_carlo_overlap, random_staircase, unit_ball_volume)
from orlicz_lab.errors import DomainError, UsageError
from orlicz_lab.young import appendix_exp, power

UNIT_SQUARE = SimpleFunction.indicator([[0, 1], [0, 1]])


class TestRegions:
    def test_ball_volume(self):
        assert Ball((0, 0), 2.0).volume == pytest.approx(4 * math.pi)
        assert Ball((0, 0, 0), 1.0).volume == pytest.approx(4 * math.pi / 3)

    def test_cube_side_and_volume(self):
        q = Cube((0, 0, 0), 0.5)
        assert q.side_length == 1.0 and q.volume == 1.0 and q.scale == 1.0

    def test_bad_radius(self):
        with pytest.raises(DomainError):
            Ball((0,), 0.0)

    def test_unit_ball_volumes(self):
        assert [unit_ball_volume(n) for n in (1, 2, 3)] == pytest.approx([2, math.pi, 4 * math.pi / 3])

    def test_box_region_measure_with_rays(self):
        reg = BoxRegion.from_boxes([[[0, 1], [0, "inf"]]])
        assert math.isinf(reg.measure)
        reg = BoxRegion.from_boxes([[[0, 1], [0, 2]], [[1, 2], [0, 1]]])
        assert reg.measure == 3.0

    def test_overlapping_cells_rejected(self):
        with pytest.raises(UsageError):
            SimpleFunction.from_cells([([[0, 2]], 1), ([[1, 3]], 1)])

    def test_json_roundtrip(self):
        f = SimpleFunction.from_json('[{"box": [[0, 1], ["-inf", 0]], "value": 2}]')
        g = SimpleFunction.from_json(f.to_json())
        assert np.array_equal(f.lo, g.lo) and np.array_equal(f.values, g.values)

    def test_zero_cells_dropped(self):
        f = SimpleFunction.from_cells([([[0, 1]], 0.0), ([[1, 2]], 3.0)])
        assert f.num_cells == 1 and f.sup_norm() == 3.0

    def test_pointwise_half_open(self):
        f = SimpleFunction.from_cells([([[0, 1]], 2.0), ([[1, 3]], 1.0)])
        assert f([[0.0], [1.0], [3.0]]).tolist() == [2.0, 1.0, 0.0]

    def test_discretize_is_labelled_approximation(self):
        g = discretize(lambda x: np.sum(x, axis=1), [[0, 1], [0, 1]], 4)
        assert g.num_cells == 16
        assert g.lp_norm(1) == pytest.approx(1.0)  # midpoint rule is exact for linear functions


class TestDistribution:
    def test_indicator(self):
        assert distribution(UNIT_SQUARE, None, 0.5) == 1.0
        assert distribution(UNIT_SQUARE, None, 2.0) == 0.0

    def test_two_level(self):
        f = SimpleFunction.from_cells([([[0, 1]], 2.0), ([[1, 3]], 1.0)])
        assert distribution(f, None, 1.5) == 1.0
        assert distribution(f, None, 0.5) == 3.0

    def test_right_continuous_at_level(self):
        f = SimpleFunction.from_cells([([[0, 1]], 2.0), ([[1, 3]], 1.0)])
        assert distribution(f, None, 1.0) == 1.0  # strict inequality
        assert distribution(f, None, 1.0 + 1e-12) == 1.0

    def test_t_must_be_positive(self):
        with pytest.raises(DomainError):
            distribution(UNIT_SQUARE, None, 0.0)

    def test_infinite_measure(self):
        f = SimpleFunction.indicator([[0, "inf"]])
        assert math.isinf(distribution(f, None, 0.5))


class TestModular:
    def test_constant_on_ball(self):
        f = SimpleFunction.indicator([[-5, 5], [-5, 5]], 3.0)
        assert modular(f, Ball((0, 0), 1.0), 3.0, power(2)) == pytest.approx(1.0)

    def test_occupancy(self):
        f = SimpleFunction.indicator([[0, 1], [-1, 1]])
        for lam in (0.5, 1.0, 2.0):
            assert modular(f, Cube((0, 0), 1.0), lam, power(3)) == pytest.approx(0.5 / lam**3)

    def test_hand_example(self):
        f = SimpleFunction.indicator([[0, 1]], 2.0)
        assert modular(f, Ball((0,), 1.0), 1.0, power(2)) == pytest.approx(2.0)

    def test_zero_times_infinity(self):
        # an unbounded cell meeting a ball only in a bounded set
        f = SimpleFunction.indicator([[0, "inf"], ["-inf", "inf"]])
        assert modular(f, Ball((0, 0), 1.0), 1.0, power(2)) == pytest.approx(0.5)

    def test_lambda_positive(self):
        with pytest.raises(DomainError):
            modular(UNIT_SQUARE, Ball((0, 0), 1.0), 0.0, power(2))


class TestBallBoxVolume:
    def test_disk_full_and_quarter(self):
        assert disk_box_area([0, 0], 1.0, [-2, -2], [2, 2]) == pytest.approx(math.pi)
        assert disk_box_area([0, 0], 1.0, [0, 0], [5, 5]) == pytest.approx(math.pi / 4)

    def test_disk_strip(self):
        # |B(0,1) ∩ {0 <= x <= 1/2}| = (pi/3 + sqrt(3)/4)/2 ... via circular segment
        seg = math.acos(0.5) - 0.5 * math.sqrt(1 - 0.25)
        assert disk_box_area([0, 0], 1.0, [0, -2], [0.5, 2]) == pytest.approx(math.pi / 2 - seg)

    @pytest.mark.parametrize("n", [3, 4])
    def test_full_ball(self, n):
        v = ball_box_volume(np.zeros(n), 1.3, -np.full(n, 5.0), np.full(n, 5.0))
        assert v == pytest.approx(unit_ball_volume(n) * 1.3**n, rel=1e-8)

    @pytest.mark.parametrize("n", [2, 3])
    def test_within_dyadic_bounds(self, n):
        rng = np.random.default_rng(n)
        for _ in range(5):
            c = rng.uniform(-1, 1, n)
            lo = rng.uniform(-1.5, 0, n)
            hi = lo + rng.uniform(0.2, 2, n)
            r = rng.uniform(0.3, 1.5)
            lower, upper = ball_box_volume_bounds(c, r, lo, hi, depth=6 if n == 3 else 9)
            v = disk_box_area(c, r, lo, hi) if n == 2 else ball_box_volume(c, r, lo, hi)
            assert lower - 1e-12 <= float(v) <= upper + 1e-12

    @pytest.mark.parametrize("region", [Ball((0.3, 0.2), 0.9), Cube((0.3, 0.2), 0.7),
                                        Ball((0.1, 0.4, 0.5), 0.8)])
    def test_monte_carlo(self, region):
        rng = np.random.default_rng(7)
        f = random_staircase(rng, region.dim, 2, extent=(-0.5, 1.2))
        exact = cell_overlaps(f, region)
        est, se = monte_carlo_overlap(f, region, samples=200_000, seed=11)
        assert np.all(np.abs(est - exact) <= 3 * se + 1e-12)

    def test_batch_cube_fractions(self):
        frac = batch_cube_overlaps(UNIT_SQUARE, np.array([[0.0, 0.0], [0.5, 0.5]]), np.array([0.5, 0.5]))
        assert frac[:, 0] == pytest.approx([0.25, 1.0])

    def test_batch_ball_matches_single(self):
        f = random_staircase(np.random.default_rng(3), 3, 2)
        centers = np.array([[0.0, 0.1, 0.2], [1.0, -0.5, 0.3]])
        radii = np.array([0.7, 1.1])
        batch = batch_ball_overlaps(f, centers, radii)
        for k in range(2):
            assert batch[k] == pytest.approx(cell_overlaps(f, Ball(tuple(centers[k]), radii[k])))


boxes = st.tuples(st.floats(-3, 3), st.floats(0.01, 3)).map(lambda t: (t[0], t[0] + t[1]))


@given(st.lists(boxes, min_size=2, max_size=2), st.lists(boxes, min_size=2, max_size=2))
def test_box_overlap_symmetric_and_bounded(a, b):
    lo1, hi1 = np.array([x[0] for x in a]), np.array([x[1] for x in a])
    lo2, hi2 = np.array([x[0] for x in b]), np.array([x[1] for x in b])
    v = box_overlap(lo1, hi1, lo2, hi2)
    assert v == box_overlap(lo2, hi2, lo1, hi1)
    assert 0 <= v <= min(np.prod(hi1 - lo1), np.prod(hi2 - lo2)) * (1 + 1e-12)


@given(st.integers(0, 10_000), st.floats(0.05, 3), st.floats(0.05, 3))
def test_distribution_nonincreasing(seed, t1, t2):
    f = random_staircase(np.random.default_rng(seed), 2, 3)
    t1, t2 = sorted((t1, t2))
    assert distribution(f, None, t1) >= distribution(f, None, t2)


@given(st.integers(0, 10_000), st.floats(0.01, 100), st.floats(0.01, 100))
def test_modular_nonincreasing_in_lambda(seed, l1, l2):
    f = random_staircase(np.random.default_rng(seed), 2, 2)
    l1, l2 = sorted((l1, l2))
    B = Ball((0.0, 0.0), 1.5)
    phi = appendix_exp(2)
    assert modular(f, B, l1, phi) >= modular(f, B, l2, phi) * (1 - 1e-12)


@given(st.integers(0, 10_000))
def test_modular_vanishes_at_infinity(seed):
    f = random_staircase(np.random.default_rng(seed), 2, 2)
    assert modular(f, Cube((0.0, 0.0), 1.0), 1e12, power(2)) < 1e-20


@given(st.integers(0, 10_000), st.floats(0.1, 3))
def test_cube_overlaps_sum_to_region_measure(seed, r):
    f = random_staircase(np.random.default_rng(seed), 2, 3, extent=(-1, 1))
    # the staircase tiles its bounding box, so a cube inside it is fully covered
    lo, hi = f.lo.min(axis=0), f.hi.max(axis=0)
    c = 0.5 * (lo + hi)
    r = min(r, 0.5 * float(np.min(hi - lo)))
    assert cell_overlaps(f, Cube(tuple(c), r)).sum() == pytest.approx((2 * r) ** 2, rel=1e-12)
