import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orlicz_lab.errors import PreconditionError, UsageError
from orlicz_lab.growth import morrey, power_law
from orlicz_lab.indicators import (BoxSpec, box_indicator_norm, box_norm_asymptotic,
                                   chi_integrand, halfcylinder_norm)
from orlicz_lab.norms import orlicz_morrey_norm
from orlicz_lab.young import appendix_exp, power


def scan_oracle(a, n, phi_y_inv, phi):
    """Dense log-grid evaluation of the integrand with an analytic inverse."""
    R = np.sort(np.concatenate([np.geomspace(1e-4, 1e4, 200001), a]))
    ratio = np.ones_like(R)
    for s in a:
        ratio *= R / np.minimum(s, R)
    return float(np.max(1.0 / (phi(R) * phi_y_inv(ratio))))


class TestSpec:
    def test_validation(self):
        with pytest.raises(UsageError):
            BoxSpec((4.0, 1.0), 2)
        with pytest.raises(UsageError):
            BoxSpec((1.0, -1.0), 2)
        with pytest.raises(UsageError):
            BoxSpec((1.0, 1.0, 1.0), 2)

    def test_sorted_from(self):
        assert BoxSpec.sorted_from([4, 1], 2).a == (1.0, 4.0)

    def test_to_function(self):
        f = BoxSpec((1.0, 2.0), 3).to_function()
        assert f.n == 3 and np.isinf(f.hi[0, 2])


class TestBoxNorm:
    def test_plateau(self):
        est = box_indicator_norm(BoxSpec((1.0, 4.0), 2), power(2), power_law(-0.5))
        assert est.value == pytest.approx(1.0, abs=1e-6)
        assert 1.0 - 1e-6 <= est.witness["argmax_R"] <= 4.0 + 1e-6

    def test_unit_sides(self):
        for Y, g in ((power(2), morrey(4, 2)), (appendix_exp(2), power_law(-0.25))):
            est = box_indicator_norm(BoxSpec((1.0, 1.0), 2), Y, g)
            from orlicz_lab.young import generalized_inverse
            floor = 1.0 / (float(g(1.0)) * generalized_inverse(Y, 1.0).value)
            assert est.value >= floor * (1 - 1e-12)

    def test_morrey_unit_square(self):
        est = box_indicator_norm(BoxSpec((1.0, 1.0), 2), power(1), power_law(-1.0))
        assert est.value == pytest.approx(1.0, rel=1e-9)

    @pytest.mark.parametrize("a,n,q,e", [((0.5, 3.0), 2, 2, 0.3), ((0.2, 1.0, 7.0), 3, 1, 0.9),
                                         ((2.0,), 2, 2, 0.25), ((0.3, 0.3, 5.0), 4, 3, 0.1)])
    def test_dense_scan_oracle(self, a, n, q, e):
        est = box_indicator_norm(BoxSpec(a, n), power(q), power_law(-e))
        want = scan_oracle(a, n, lambda u: u ** (1.0 / q), lambda r: r ** (-e))
        assert est.value == pytest.approx(want, rel=1e-6)
        assert est.value >= want * (1 - 1e-12)

    def test_k1_flagged(self):
        est = box_indicator_norm(BoxSpec((1.0,), 2), power(2), power_law(-0.25))
        assert "k = 1" in est.diagnostic

    def test_infinite_flagged(self):
        # 1/(phi Phi^{-1}) ~ R^{1 - 1/2} grows without bound
        est = box_indicator_norm(BoxSpec((1.0,), 2), power(2), power_law(-1.0))
        assert "infinite" in est.diagnostic

    @pytest.mark.parametrize("seed", range(6))
    def test_cube_search_agrees(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        k = int(rng.integers(1, n + 1))
        spec = BoxSpec.sorted_from(np.exp(rng.uniform(-2, 2, k)), n)
        g = power_law(-0.25)
        a = box_indicator_norm(spec, power(2), g).value
        b = orlicz_morrey_norm(spec.to_function(), power(2), g, {"region": "cube"}).value
        assert a == pytest.approx(b, rel=0.02)


class TestAsymptotic:
    def test_window_case(self):
        # n = 2, q = 1: the k = 2 window is 1 < p < 2
        rep = box_norm_asymptotic(BoxSpec((1.0, 4.0), 2), power(1), morrey(1.5, 2))
        assert rep.hypotheses_certified and rep.passed
        from_formula = 1.0 / (float(morrey(1.5, 2)(4.0)) * 4.0)
        assert rep.candidate == pytest.approx(from_formula)
        assert rep.direct >= rep.candidate * (1 - 1e-9)

    def test_equal_sides(self):
        rep = box_norm_asymptotic(BoxSpec((1.0, 1.0), 2), power(1), morrey(1.5, 2))
        assert rep.candidate == pytest.approx(1.0 / float(morrey(1.5, 2)(1.0)))

    def test_needs_k_eq_n(self):
        with pytest.raises(UsageError):
            box_norm_asymptotic(BoxSpec((1.0,), 2), power(1), morrey(3, 2))

    def test_uncertified(self):
        # p = 3 sits in the k = 1 window, so the lower profile decreases
        with pytest.raises(PreconditionError):
            box_norm_asymptotic(BoxSpec((1.0, 4.0), 2), power(1), morrey(3, 2))


class TestHalfCylinder:
    def test_plateau(self):
        rep = halfcylinder_norm(BoxSpec((1.0,), 2), power(2), power_law(-0.25))
        assert rep.passed and rep.candidate == pytest.approx(1.0)

    def test_3d(self):
        rep = halfcylinder_norm(BoxSpec((1.0, 2.0), 3), power(2), power_law(-0.25))
        assert rep.passed

    def test_grows_with_side(self):
        vals = [halfcylinder_norm(BoxSpec((s,), 2), power(2), power_law(-0.25)).direct
                for s in (1.0, 4.0, 16.0, 64.0)]
        assert all(x < y for x, y in zip(vals, vals[1:]))

    def test_uncertified(self):
        with pytest.raises(PreconditionError):
            halfcylinder_norm(BoxSpec((1.0,), 2), power(2), power_law(-1.5))


def test_integrand_vectorised():
    spec = BoxSpec((1.0, 4.0), 2)
    R = np.array([0.5, 2.0, 8.0])
    v = chi_integrand(spec, power(2), power_law(-0.5), R)
    want = [np.sqrt(r) * np.sqrt(min(1, r) * min(4, r) / r**2) for r in R]
    assert np.allclose(v, want, rtol=1e-12)


sides = st.lists(st.floats(0.125, 8.0), min_size=1, max_size=3)


@settings(max_examples=25)
@given(sides, st.integers(0, 2), st.floats(1.0, 4.0))
def test_monotone_in_sides(a, j, grow):
    n = 3
    spec = BoxSpec.sorted_from(a, n)
    bigger = list(spec.a)
    bigger[j % len(bigger)] *= grow
    Y, g = power(2), power_law(-0.25)
    assert box_indicator_norm(BoxSpec.sorted_from(bigger, n), Y, g).value >= \
        box_indicator_norm(spec, Y, g).value * (1 - 1e-9)
