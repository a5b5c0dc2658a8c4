import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_lab.domain import Ball, Cube, SimpleFunction, random_staircase
from orlicz_lab.errors import PreconditionError
from orlicz_lab.growth import constant, morrey, oscillating, power_law
from orlicz_lab.norms import (SearchSpec, cube_ball_comparability, lp_constants,
                              lp_embedding_check, luxemburg_batch, luxemburg_norm,
                              norm_comparison, orlicz_morrey_norm, thread_cap,
                              weak_luxemburg_batch, weak_luxemburg_closed_form,
                              weak_luxemburg_norm, weak_norm_identity, weak_orlicz_morrey_norm)
from orlicz_lab.young import appendix_exp, flat_then_linear, piecewise, power

FAST = SearchSpec(region="cube", j_min=-8, j_max=8)
STAIR_1D = SimpleFunction.from_cells([([[0, 1]], 2.0), ([[1, 3]], 1.0)])
# a smooth convex generator that is not a pure power, to exercise bisection
QUAD_LIN = piecewise([{"from": 0, "coeffs": [0, 0, 1]}, {"from": 1, "coeffs": [1, 2]}])


class TestLuxemburg:
    @pytest.mark.parametrize("q", [1.0, 2.0, 3.5])
    def test_constant(self, q):
        f = SimpleFunction.indicator([[-3, 3], [-3, 3]], 2.5)
        est = luxemburg_norm(f, Ball((0, 0), 1.0), power(q))
        assert est.value == pytest.approx(2.5, rel=1e-10)
        assert est.lo <= est.value <= est.hi

    def test_quarter_occupancy(self):
        f = SimpleFunction.indicator([[0, 5], [0, 5]])
        est = luxemburg_norm(f, Cube((0, 0), 1.0), power(2))
        assert est.value == pytest.approx(0.5, rel=1e-12)

    def test_zero(self):
        f = SimpleFunction.indicator([[5, 6], [5, 6]])
        assert luxemburg_norm(f, Ball((0, 0), 1.0), power(2)).value == 0.0

    @pytest.mark.parametrize("theta", [0.1, 0.25, 0.8])
    def test_occupancy_closed_form_bisection_path(self, theta):
        f = SimpleFunction.indicator([[-1, -1 + 2 * theta]])
        est = luxemburg_norm(f, Cube((0.0,), 1.0), appendix_exp(1), tol=1e-12)
        from orlicz_lab.young import generalized_inverse
        want = 1.0 / generalized_inverse(appendix_exp(1), 1.0 / theta, tol=1e-13).value
        assert est.value == pytest.approx(want, rel=1e-9)

    def test_bracket_width(self):
        est = luxemburg_norm(STAIR_1D, Ball((1.0,), 1.5), QUAD_LIN, tol=1e-8)
        assert est.hi - est.lo <= 1e-8 * est.value * 1.01

    def test_generic_path_agrees_with_power_fast_path(self):
        rng = np.random.default_rng(0)
        W = rng.random((50, 4)) / 4
        v = rng.uniform(0.1, 3, 4)
        fast = luxemburg_batch(W, v, power(3))[0]
        generic = luxemburg_batch(W, v, piecewise([{"from": 0, "coeffs": [0, 0, 0, 1]}]))
        assert np.allclose(fast, generic[0], rtol=1e-10)


class TestWeakLuxemburg:
    def test_indicator_equals_strong(self):
        f = SimpleFunction.indicator([[0, 1], [0, 3]])
        for Y in (power(2), appendix_exp(2), QUAD_LIN):
            B = Ball((0.5, 0.5), 1.2)
            assert weak_luxemburg_norm(f, B, Y).value == pytest.approx(
                luxemburg_norm(f, B, Y).value, rel=1e-9)

    def test_constant(self):
        f = SimpleFunction.indicator([[-2, 2]], 4.0)
        assert weak_luxemburg_norm(f, Ball((0.0,), 1.0), power(3)).value == pytest.approx(4.0)

    def test_staircase_formula(self):
        # B = (0, 2): m(B, f, t) = 2 for t < 1, 1 for 1 <= t < 2
        B = Ball((1.0,), 1.0)
        want = max(lam / (1.0 / math.sqrt(2.0 / m)) for lam, m in ((1.0, 2.0), (2.0, 1.0)))
        want = max(1.0 * math.sqrt(2.0 / 2.0) ** -1, 2.0 * math.sqrt(2.0 / 1.0) ** -1)
        assert weak_luxemburg_norm(STAIR_1D.__class__.from_cells(
            [([[0, 1]], 2.0), ([[1, 2]], 1.0)]), B, power(2)).value == pytest.approx(want)

    def test_closed_form_oracle(self):
        rng = np.random.default_rng(1)
        W = rng.random((40, 5)) / 5
        v = rng.uniform(0.1, 3, 5)
        for Y in (power(2), appendix_exp(1), QUAD_LIN, flat_then_linear(0.3)):
            lo, hi = weak_luxemburg_batch(W, v, Y)
            oracle = weak_luxemburg_closed_form(W, v, Y)
            assert np.allclose(0.5 * (lo + hi), oracle, rtol=1e-8)


class TestOrliczMorrey:
    def test_morrey_unit_interval(self):
        # phi(r) = (2r)^{-1}: the Morrey normalisation by interval length
        est = orlicz_morrey_norm(SimpleFunction.indicator([[0, 1]]), power(1), power_law(-1, 0.5))
        assert est.value == pytest.approx(1.0, rel=1e-9)

    def test_zero(self):
        est = orlicz_morrey_norm(SimpleFunction.zero(2), power(2), morrey(4, 2))
        assert est.value == 0.0

    def test_indicator_cube_search(self):
        f = SimpleFunction.indicator([[0, 1], [0, 4]])
        est = orlicz_morrey_norm(f, power(2), morrey(4, 2), {"region": "cube"})
        assert est.value == pytest.approx(1.0, abs=1e-6)

    def test_witness_reproduces_value(self):
        f = random_staircase(np.random.default_rng(5), 2, 3)
        for region, cls, scale in (("ball", Ball, 1.0), ("cube", Cube, 2.0)):
            est = orlicz_morrey_norm(f, QUAD_LIN, morrey(3, 2), {"region": region})
            w = est.witness
            single = luxemburg_norm(f, cls(tuple(w["center"]), w["radius"]), QUAD_LIN)
            phi = float(morrey(3, 2)(scale * w["radius"]))
            assert est.value == pytest.approx(single.value / phi, rel=1e-8)

    def test_dense_grid_oracle_1d(self):
        rng = np.random.default_rng(11)
        f = random_staircase(rng, 1, 5)
        phi = power_law(-0.25)
        est = orlicz_morrey_norm(f, power(2), phi)
        a = np.linspace(-4, 4, 801)
        r = np.geomspace(1e-3, 1e3, 601)
        A, R = np.meshgrid(a, r, indexing="ij")
        ov = np.clip(np.minimum(f.hi[:, 0][None, None], (A + R)[..., None])
                     - np.maximum(f.lo[:, 0][None, None], (A - R)[..., None]), 0, None)
        lux = np.sqrt((ov * f.values**2).sum(-1) / (2 * R))
        brute = float(np.max(lux / phi(R)))
        assert est.value >= brute * (1 - 1e-9)
        assert est.converged

    def test_weak_indicator_equals_strong(self):
        f = SimpleFunction.indicator([[0, 1], [0, 2]])
        s = orlicz_morrey_norm(f, appendix_exp(2), morrey(4, 2), FAST)
        w = weak_orlicz_morrey_norm(f, appendix_exp(2), morrey(4, 2), FAST)
        assert w.value == pytest.approx(s.value, rel=1e-8)

    def test_deterministic(self):
        f = random_staircase(np.random.default_rng(2), 2, 3)
        a = orlicz_morrey_norm(f, power(2), oscillating(-1.0))
        b = orlicz_morrey_norm(f, power(2), oscillating(-1.0))
        assert a.value == b.value and a.witness == b.witness

    def test_search_spec_validation(self):
        from orlicz_lab.errors import UsageError
        with pytest.raises(UsageError):
            SearchSpec.from_spec({"region": "sphere"})
        with pytest.raises(UsageError):
            SearchSpec.from_spec({"bogus": 1})


class TestIdentity:
    def test_indicator(self):
        rep = weak_norm_identity(SimpleFunction.indicator([[0, 1]]), power(1), morrey(2, 1))
        assert rep.passed and rep.weak_norm == pytest.approx(rep.level_formula)

    def test_staircase(self):
        rep = weak_norm_identity(STAIR_1D, power(1), morrey(2, 1))
        assert rep.relative_gap <= 1e-6 and rep.passed

    def test_zero(self):
        rep = weak_norm_identity(SimpleFunction.zero(1), power(1), morrey(2, 1))
        assert rep.weak_norm == rep.level_formula == 0.0


class TestComparability:
    def test_1d(self):
        rep = cube_ball_comparability(SimpleFunction.indicator([[0, 1]]), power(1), morrey(2, 1))
        assert 0.5 <= rep.ratio <= 2.0 and rep.passed

    def test_zero(self):
        rep = cube_ball_comparability(SimpleFunction.zero(2), power(2), morrey(4, 2))
        assert rep.ball_norm == rep.cube_norm == 0.0

    def test_2d_square(self):
        rep = cube_ball_comparability(SimpleFunction.indicator([[0, 1], [0, 1]]), power(2), morrey(4, 2))
        d = (2 * math.sqrt(2)) ** 2
        assert 1 / d <= rep.ratio <= d and rep.passed


class TestLpEmbedding:
    @pytest.mark.parametrize("n,p", [(1, 2.0), (2, 3.0)])
    def test_indicator(self, n, p):
        f = SimpleFunction.indicator([[0, 1]] * n)
        rep = lp_embedding_check(f, p, power(p), morrey(p, n))
        assert rep.C1 == pytest.approx(1.0) and rep.C2 == pytest.approx(1.0)
        assert rep.passed

    def test_zero(self):
        rep = lp_embedding_check(SimpleFunction.zero(1), 2.0, power(2), morrey(2, 1))
        assert rep.norm == 0.0 and rep.passed

    def test_scaled_interval(self):
        f = SimpleFunction.indicator([[0, 2]], 3.0)
        rep = lp_embedding_check(f, 2.0, power(2), morrey(2, 1))
        assert rep.lp_norm == pytest.approx(3 * math.sqrt(2))
        assert rep.norm <= rep.bound

    def test_uncertified(self):
        with pytest.raises(PreconditionError):
            lp_constants(2.0, 1, power(3), morrey(2, 1))
        with pytest.raises(PreconditionError):
            lp_constants(2.0, 1, power(2), constant(1.0))


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("ORLICZ_LAB_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.delenv("ORLICZ_LAB_THREADS")
    assert thread_cap() >= 1


staircases = st.builds(lambda seed, n: random_staircase(np.random.default_rng(seed), n, 2),
                       st.integers(0, 10**6), st.integers(1, 2))
youngs = st.sampled_from([power(1), power(2), QUAD_LIN, appendix_exp(1)])
growths = st.sampled_from([morrey(2, 1), morrey(4, 2), oscillating(-0.5), power_law(-0.25)])


@given(staircases, youngs, growths, st.floats(0.01, 100))
def test_homogeneity(f, Y, g, c):
    a = orlicz_morrey_norm(f, Y, g, FAST).value
    b = orlicz_morrey_norm(f.scaled(c), Y, g, FAST).value
    assert b == pytest.approx(c * a, rel=1e-8)


@given(staircases, youngs, growths, st.floats(0.0, 1.0))
def test_monotone_in_f(f, Y, g, shrink):
    # g <= f pointwise, same cells
    smaller = SimpleFunction(f.lo, f.hi, f.values * np.linspace(shrink, 1.0, f.num_cells), check=False)
    big = orlicz_morrey_norm(f, Y, g, FAST)
    small = orlicz_morrey_norm(smaller, Y, g, FAST, coords=f.corner_coords(),
                               extra_candidates=[(big.witness["center"], big.witness["radius"])])
    big = orlicz_morrey_norm(f, Y, g, FAST, extra_candidates=[(small.witness["center"],
                                                                small.witness["radius"])])
    assert small.value <= big.value * (1 + 1e-9)


@given(staircases, staircases, youngs, growths)
def test_quasi_triangle(f, h, Y, g):
    if f.n != h.n:
        h = random_staircase(np.random.default_rng(0), f.n, 2)
    # f + h on the common refinement, as a sum of two separately supported parts
    shift = float(np.max(f.hi[np.isfinite(f.hi)]) - np.min(h.lo[np.isfinite(h.lo)])) + 1.0
    moved = SimpleFunction(h.lo + shift, h.hi + shift, h.values, check=False)
    total = SimpleFunction(np.vstack([f.lo, moved.lo]), np.vstack([f.hi, moved.hi]),
                           np.concatenate([f.values, moved.values]))
    lhs = orlicz_morrey_norm(total, Y, g, FAST).value
    rhs = orlicz_morrey_norm(f, Y, g, FAST).value + orlicz_morrey_norm(moved, Y, g, FAST).value
    assert lhs <= 2.0 * rhs * (1 + 1e-9)


@given(staircases, youngs, growths)
def test_weak_below_strong(f, Y, g):
    s = orlicz_morrey_norm(f, Y, g, FAST)
    w = weak_orlicz_morrey_norm(f, Y, g, FAST, extra_candidates=[(s.witness["center"],
                                                                  s.witness["radius"])])
    s = orlicz_morrey_norm(f, Y, g, FAST, extra_candidates=[(w.witness["center"],
                                                             w.witness["radius"])])
    assert w.value <= s.value * (1 + 1e-9)


@given(staircases, st.floats(1, 3), st.floats(0.1, 1))
def test_norm_comparison(f, q, e):
    # phi2 = 2^e r^{-e}... compare (t^q, r^{-e}) against (t^{q}, 2 r^{-e})
    rep = norm_comparison(f, (power(q), power_law(-e)), (power(q), power_law(-e, 0.5)), FAST)
    assert rep.c1 == pytest.approx(0.5) and rep.passed
