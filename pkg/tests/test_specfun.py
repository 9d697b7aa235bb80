"""Tests for the special-function kernels.

Reference values were computed once with mpmath at 40 digits (erfc, besseli,
findroot, and direct quadrature of the Marcum integral
int_b^inf x exp(-(x^2 + a^2)/2) I0(a x) dx) and are frozen here.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hdcap.specfun import (
    bessel_i0_inv_log,
    binary_entropy,
    gaussian_q,
    log_bessel_i0,
    marcum_q1,
    marcum_q1_complement,
)

Q_CASES = [
    (0.0, 0.5),
    (1.0, 0.15865525393145705),
    (math.sqrt(2.0), 0.078649603525142565),
    (5.0, 2.8665157187919391e-7),
    (10.0, 7.6198530241605261e-24),
    (37.0, 5.7255712225245768e-300),
    (-2.0, 0.97724986805182079),
]

LOG_I0_CASES = [
    (0.5, 0.061549719185481304),
    (1.0, 0.23591435850717868),
    (10.0, 7.9429720831186956),
    (700.0, 695.80569999844345),
    (1e4, 9994.4759037814323),
]

# (a, b, Q1(a, b), 1 - Q1(a, b))
MARCUM_CASES = [
    (1.0, 1.0, 0.73287980379682022, 0.26712019620317978),
    (3.0, 2.0, 0.88672075440239226, 0.11327924559760774),
    (0.5, 4.0, 0.00073703530680494838, 0.99926296469319505),
    (20.0, 25.0, 3.217572740438955e-7, 0.99999967824272596),
    (30.0, 20.0, 1.0, 6.2075898076439334e-24),
    (2.0, 0.1, 0.99932163471108559, 0.00067836528891441184),
    (40.0, 38.0, 0.97793346482220543, 0.022066535177794569),
]

I0_INV_CASES = [
    (0.1, 0.64035472487702492),
    (3.0, 4.6573511180828464),
    (16.6746, 19.060610162644261),
    (200.0, 203.57634354061392),
]


class TestGaussianQ:
    @pytest.mark.parametrize("x, expected", Q_CASES)
    def test_reference_values(self, x, expected):
        assert gaussian_q(x) == pytest.approx(expected, rel=1e-12, abs=1e-16)

    def test_infinite_limits(self):
        assert gaussian_q(math.inf) == 0.0
        assert gaussian_q(-math.inf) == 1.0

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            gaussian_q(float("nan"))

    def test_array_shape_preserved(self):
        x = np.linspace(-3, 3, 12).reshape(3, 4)
        assert gaussian_q(x).shape == (3, 4)

    def test_scalar_returns_float(self):
        assert isinstance(gaussian_q(0.3), float)

    @given(st.floats(-30, 30))
    def test_symmetry(self, x):
        assert gaussian_q(x) + gaussian_q(-x) == pytest.approx(1.0, abs=1e-15)

    @given(st.floats(-7, 8), st.floats(1e-3, 2))
    def test_strictly_decreasing(self, x, dx):
        # below x = -7 the value sits within a few ulps of 1 and adjacent
        # arguments can round to the same double
        assert gaussian_q(x + dx) < gaussian_q(x)

    @given(st.floats(-40, 40), st.floats(0, 2))
    def test_nonincreasing(self, x, dx):
        assert gaussian_q(x + dx) <= gaussian_q(x)

    @given(st.floats(-8, 8))
    def test_matches_normal_survival(self, x):
        assert gaussian_q(x) == pytest.approx(stats.norm.sf(x), rel=1e-12)


class TestLogBesselI0:
    @pytest.mark.parametrize("x, expected", LOG_I0_CASES)
    def test_reference_values(self, x, expected):
        assert log_bessel_i0(x) == pytest.approx(expected, rel=1e-13)

    def test_zero(self):
        assert log_bessel_i0(0.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            log_bessel_i0(-1e-3)

    def test_no_overflow_for_huge_argument(self):
        x = 1e6
        expected = x - 0.5 * math.log(2 * math.pi * x) + math.log1p(1 / (8 * x))
        assert log_bessel_i0(x) == pytest.approx(expected, rel=1e-14)

    @given(st.floats(0, 1e5), st.floats(1e-6, 10))
    def test_increasing(self, x, dx):
        assert log_bessel_i0(x + dx) > log_bessel_i0(x)


class TestBesselI0InverseLog:
    @pytest.mark.parametrize("log_y, expected", I0_INV_CASES)
    def test_reference_values(self, log_y, expected):
        assert bessel_i0_inv_log(log_y) == pytest.approx(expected, rel=1e-12)

    def test_zero_and_infinity(self):
        assert bessel_i0_inv_log(0.0) == 0.0
        assert bessel_i0_inv_log(math.inf) == math.inf

    def test_below_one_rejected(self):
        with pytest.raises(ValueError):
            bessel_i0_inv_log(-0.5)

    def test_vectorized(self):
        logs = np.array([c[0] for c in I0_INV_CASES])
        got = bessel_i0_inv_log(logs)
        np.testing.assert_allclose(got, [c[1] for c in I0_INV_CASES], rtol=1e-12)

    @given(st.floats(1e-8, 1e5))
    def test_round_trip(self, x):
        back = bessel_i0_inv_log(log_bessel_i0(x))
        assert back == pytest.approx(x, rel=1e-9, abs=1e-6)

    @settings(max_examples=50)
    @given(st.floats(1e-6, 5e4))
    def test_residual(self, log_y):
        x = bessel_i0_inv_log(log_y)
        assert log_bessel_i0(x) == pytest.approx(log_y, abs=1e-12, rel=1e-14)


class TestMarcumQ1:
    @pytest.mark.parametrize("a, b, q, qc", MARCUM_CASES)
    def test_reference_values(self, a, b, q, qc):
        assert marcum_q1(a, b) == pytest.approx(q, rel=1e-10, abs=1e-16)
        assert marcum_q1_complement(a, b) == pytest.approx(qc, rel=1e-10, abs=1e-16)

    def test_against_noncentral_chi2(self):
        a, b = np.meshgrid(np.linspace(0, 6, 7), np.linspace(0.1, 8, 9))
        expected = stats.ncx2.sf(b**2, 2, a**2)
        np.testing.assert_allclose(marcum_q1(a, b), expected, rtol=1e-9, atol=1e-14)

    def test_edge_cases(self):
        assert marcum_q1(3.0, 0.0) == 1.0
        assert marcum_q1(3.0, math.inf) == 0.0
        assert marcum_q1(math.inf, 5.0) == 1.0
        assert marcum_q1_complement(3.0, 0.0) == 0.0

    def test_a_zero_is_rayleigh_tail(self):
        b = np.linspace(0, 10, 21)
        np.testing.assert_allclose(marcum_q1(0.0, b), np.exp(-b**2 / 2), rtol=1e-13, atol=1e-300)

    @pytest.mark.parametrize("a, b", [(-1.0, 1.0), (1.0, -1.0), (math.nan, 1.0)])
    def test_invalid_rejected(self, a, b):
        with pytest.raises(ValueError):
            marcum_q1(a, b)

    @given(st.floats(0, 60), st.floats(0, 60))
    def test_complement_sums_to_one(self, a, b):
        total = marcum_q1(a, b) + marcum_q1_complement(a, b)
        assert total == pytest.approx(1.0, abs=1e-13)

    @given(st.floats(0, 40), st.floats(0, 40), st.floats(1e-3, 3))
    def test_monotone(self, a, b, db):
        assert marcum_q1(a, b + db) <= marcum_q1(a, b) + 1e-15
        assert marcum_q1(a + db, b) >= marcum_q1(a, b) - 1e-15

    @given(st.floats(0, 40), st.floats(0, 40))
    def test_in_unit_interval(self, a, b):
        q = marcum_q1(a, b)
        assert 0.0 <= q <= 1.0


class TestBinaryEntropy:
    @pytest.mark.parametrize("p, expected", [
        (0.078650, 0.2754597580224204),
        (0.5, 0.69314718055994531),
        (1e-6, 1.4815510057964107e-5),
    ])
    def test_reference_values(self, p, expected):
        assert binary_entropy(p) == pytest.approx(expected, rel=1e-13)

    def test_endpoints(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    @pytest.mark.parametrize("p", [-0.1, 1.1, math.nan])
    def test_out_of_range(self, p):
        with pytest.raises(ValueError):
            binary_entropy(p)

    @given(st.floats(0, 1))
    def test_symmetric_and_bounded(self, p):
        h = binary_entropy(p)
        assert h == pytest.approx(binary_entropy(1 - p), abs=1e-15)
        assert 0.0 <= h <= math.log(2) + 1e-16


class TestMarcumQ1Invariants:
    @pytest.mark.parametrize("a", [0.5, 3.0, 12.0, 35.0])
    def test_continuous_across_tail_switch(self, a):
        # the directly summed tail changes where b^2 = a^2 + 1
        b0 = math.sqrt(a * a + 1.0)
        lo, hi = b0 - 1e-13, b0 + 1e-13
        assert lo**2 < a * a + 1.0 < hi**2
        below, above = marcum_q1(a, lo), marcum_q1(a, hi)
        # the Rice density is below 0.5, so the true change is under 1e-13
        assert abs(below - above) < 1e-12
        assert below >= above

    def test_monotone_on_grid(self):
        a, b = np.meshgrid(np.linspace(0, 50, 50), np.linspace(0, 50, 50), indexing="ij")
        q = marcum_q1(a, b)
        assert np.all(np.diff(q, axis=0) >= -1e-15)
        assert np.all(np.diff(q, axis=1) <= 1e-15)

    @pytest.mark.parametrize("zeta", [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99])
    def test_lower_bound_below_diagonal(self, zeta):
        a = np.linspace(0.1, 45, 60)
        bound = 1.0 - zeta / (1.0 - zeta) * np.exp(-a**2 * (1 - zeta) ** 2 / 2)
        assert np.all(marcum_q1(a, a * zeta) >= bound - 1e-15)
