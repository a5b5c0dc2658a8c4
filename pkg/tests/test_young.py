import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_lab.errors import DomainError, UsageError
from orlicz_lab.young import (appendix_exp, certify_young, eval_young, flat_then_linear,
                              from_spec, generalized_inverse, inverse_values, opaque, piecewise,
                              power, verify_inverse_sandwich)


def dense_inverse(phi, u, lo=0.0, hi=10.0, points=2_000_001):
    """Brute-force oracle: first grid point with Phi(t) > u."""
    t = np.linspace(lo, hi, points)
    above = phi(t) > u
    assert above[-1], "oracle range too small"
    return t[np.argmax(above)], (hi - lo) / (points - 1)


class TestEval:
    def test_power(self):
        assert eval_young(power(2), 3.0) == 9.0

    @pytest.mark.parametrize("q", [1.0, 1.5, 2.0, 7.0])
    def test_zero(self, q):
        assert eval_young(power(q), 0.0) == 0.0

    def test_appendix_value_n1(self):
        assert eval_young(appendix_exp(1), 0.5) == pytest.approx(4 * math.exp(-2), rel=1e-14)

    def test_appendix_continuous_at_half(self):
        for n in (1, 2, 3):
            phi = appendix_exp(n)
            below, above = phi(0.5 - 1e-12), phi(0.5 + 1e-12)
            assert above == pytest.approx(below, rel=1e-9)

    def test_negative_is_domain_error(self):
        with pytest.raises(DomainError):
            eval_young(power(2), -1.0)

    def test_domain_cap(self):
        phi = from_spec({"kind": "power", "q": 2, "domain_cap": 5})
        assert phi(4.0) == 16.0
        assert math.isinf(phi(6.0))

    def test_power_needs_q_at_least_one(self):
        with pytest.raises(UsageError):
            power(0.5)

    def test_from_spec_shorthand(self):
        assert from_spec("power:q=3")(2.0) == 8.0
        assert from_spec("appendix-exp:n=2").params == {"n": 2}
        assert from_spec("flat")(0.5) == 0.0

    def test_unknown_kind(self):
        with pytest.raises(UsageError):
            from_spec({"kind": "nope"})

    def test_piecewise_matches_flat(self):
        phi = piecewise([{"from": 0, "coeffs": [0]}, {"from": 1, "coeffs": [0, 1]}])
        t = np.linspace(0, 3, 31)
        assert np.allclose(phi(t), np.maximum(t - 1, 0))


class TestInverse:
    def test_square(self):
        res = generalized_inverse(power(2), 4.0, tol=1e-12)
        assert res.lo <= 2.0 <= res.hi
        assert res.hi - res.lo <= 1e-11
        assert res.value == pytest.approx(2.0, rel=1e-12)

    def test_flat_segment_right_end(self):
        res = generalized_inverse(flat_then_linear(), 0.0)
        assert res.value == pytest.approx(1.0, rel=1e-10)

    def test_infinity(self):
        assert math.isinf(generalized_inverse(power(3), math.inf).value)

    def test_negative_u(self):
        with pytest.raises(DomainError):
            generalized_inverse(power(2), -1.0)

    def test_bracket_contains_value(self):
        res = generalized_inverse(appendix_exp(2), 3.0, tol=1e-8)
        assert res.lo <= res.value <= res.hi
        assert (res.hi - res.lo) <= 1e-8 * res.hi + 1e-12

    def test_overflow_flag_for_capped_function(self):
        phi = opaque(lambda t: min(t, 1.0), name="bounded")
        res = generalized_inverse(phi, 2.0)
        assert math.isinf(res.value) and res.overflow

    @pytest.mark.parametrize("u", [0.01, 0.3, 1.0, 5.0, 40.0])
    def test_dense_grid_oracle_appendix(self, u):
        phi = appendix_exp(1)
        t0, h = dense_inverse(phi, u, 0.0, 8.0)
        val = generalized_inverse(phi, u).value
        # the true infimum lies in (t0 - h, t0]
        assert t0 - 1.01 * h <= val <= t0 + 1e-9

    def test_dense_grid_oracle_flat(self):
        phi = flat_then_linear(0.7)
        for u in (0.0, 0.2, 1.3):
            t0, h = dense_inverse(phi, u, 0.0, 8.0)
            val = generalized_inverse(phi, u).value
            assert t0 - 1.01 * h <= val <= t0 + 1e-9


class TestSandwich:
    def test_power_grid(self):
        assert verify_inverse_sandwich(power(2), [0, 1, 4, 100]).passed

    def test_flat_at_zero(self):
        phi = flat_then_linear()
        res = generalized_inverse(phi, 0.0)
        assert res.lo <= 1.0 <= res.hi
        assert phi(res.lo) == 0.0
        assert verify_inverse_sandwich(phi, [0.0]).passed

    def test_appendix_log_grid(self):
        assert verify_inverse_sandwich(appendix_exp(1), np.geomspace(1e-3, 1e3, 50)).passed

    def test_detects_violation_for_bad_inverse_grid(self):
        with pytest.raises(DomainError):
            verify_inverse_sandwich(power(2), [-1.0])


class TestCertificate:
    def test_power(self):
        assert certify_young(power(1.5), np.linspace(0, 10, 100)).passed

    def test_sqrt_not_convex(self):
        cert = certify_young(opaque(math.sqrt, "sqrt"), np.linspace(0, 10, 100))
        assert not cert.convex
        assert cert.worst_convexity_defect > 0

    def test_appendix(self):
        grid = np.concatenate([[0.0], np.geomspace(1e-4, 1e2, 300)])
        for n in (1, 2, 3):
            assert certify_young(appendix_exp(n), grid).passed

    def test_appendix_second_difference_oracle(self):
        # independent convexity check on a uniform grid
        t = np.linspace(0, 3, 30001)
        v = appendix_exp(2)(t)
        d2 = v[2:] - 2 * v[1:-1] + v[:-2]
        assert np.all(d2 >= -1e-9 * np.abs(v[1:-1]))

    def test_bounded_function_fails_unbounded(self):
        cert = certify_young(opaque(lambda t: min(t, 0.5)), np.linspace(0, 10, 50))
        assert not cert.unbounded

    def test_empty_grid(self):
        with pytest.raises(UsageError):
            certify_young(power(2), [])


young_families = st.sampled_from([power(1), power(2), power(5), flat_then_linear(),
                                  appendix_exp(1), appendix_exp(2)])


@given(young_families, st.floats(0, 1e4), st.floats(0, 1e4))
def test_inverse_monotone(phi, u1, u2):
    u1, u2 = sorted((u1, u2))
    a = generalized_inverse(phi, u1)
    b = generalized_inverse(phi, u2)
    assert a.value <= b.value * (1 + 1e-9) + 1e-12


@given(young_families, st.lists(st.floats(0, 1e6), min_size=1, max_size=20))
def test_sandwich_property(phi, us):
    assert verify_inverse_sandwich(phi, us).passed


@given(st.floats(1, 8), st.floats(1e-6, 1e6))
def test_bijective_roundtrip(q, t):
    phi = power(q)
    assert float(inverse_values(phi, [phi(t)])[0]) == pytest.approx(t, rel=1e-9)
