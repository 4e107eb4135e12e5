import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from anchor.errors import ConfigError, ValidationError
from anchor.interpolation import (InterpKernel, default_radius, interp_bilinear, interp_gaussian,
                                  interp_grad_features, sample)
from anchor.numerics import finite_diff_grad, make_rng
from oracles import gaussian_interp_mp

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestKernel:
    def test_default_radius(self):
        assert default_radius(0.3) == 2
        assert default_radius(1.0) == 3
        assert default_radius(1.5) == 5
        assert InterpKernel.gaussian().window_radius == 3

    @pytest.mark.parametrize("sigma,radius", [(0.0, 2), (-1.0, 2), (1.0, 0), (1.0, 1.5)])
    def test_invalid(self, sigma, radius):
        with pytest.raises(ConfigError):
            InterpKernel.gaussian(sigma, radius)

    def test_bilinear_ignores_sigma(self):
        k = InterpKernel("bilinear", 3.0, 4)
        assert k.sigma is None and k.window_radius is None
        assert k.taps == 2

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            InterpKernel("cubic")


class TestBilinear:
    def test_linear_blend(self):
        r = interp_bilinear([0.0, 10.0], 0.3)
        assert r.value == pytest.approx(3.0, abs=1e-15)
        assert r.dvalue_dp == 10.0
        assert [q for q, _ in r.weights] == [0, 1]
        np.testing.assert_allclose([a for _, a in r.weights], [0.7, 0.3])

    @pytest.mark.parametrize("p", [0.0, 0.5, 1.25, 1.999])
    def test_constant(self, p):
        r = interp_bilinear([5.0, 5.0, 5.0], p)
        assert r.value == pytest.approx(5.0)
        assert r.dvalue_dp == 0.0

    def test_zero_padding_boundary(self):
        r = interp_bilinear([2.0, 8.0], 1.5)
        assert r.value == 4.0
        assert r.dvalue_dp == -8.0

    def test_right_hand_derivative_at_integer(self):
        x = [1.0, 4.0, 9.0]
        assert interp_bilinear(x, 1.0).dvalue_dp == 5.0
        assert interp_bilinear(x, 1.0).value == 4.0

    @given(arrays(np.float64, st.integers(2, 12), elements=finite), st.data())
    def test_gradient_law_and_piecewise_constant(self, x, data):
        q = data.draw(st.integers(0, len(x) - 2))
        d1 = data.draw(st.floats(1e-6, 1 - 1e-6))
        d2 = data.draw(st.floats(1e-6, 1 - 1e-6))
        g1 = interp_bilinear(x, q + d1).dvalue_dp
        g2 = interp_bilinear(x, q + d2).dvalue_dp
        assert g1 == x[q + 1] - x[q]
        assert g1 == g2

    def test_nonfinite_p(self):
        with pytest.raises(ValidationError):
            interp_bilinear([1.0, 2.0], math.nan)


class TestGaussian:
    def test_constant(self):
        r = interp_gaussian([5.0, 5.0, 5.0], 1.0, InterpKernel.gaussian(1.0, 1))
        assert r.value == pytest.approx(5.0, abs=1e-14)
        assert r.dvalue_dp == 0.0

    def test_symmetric_configuration(self):
        r = interp_gaussian([1.0, 2.0, 1.0], 1.0, InterpKernel.gaussian(0.8, 1))
        assert abs(r.dvalue_dp) < 1e-15
        assert 1.0 < r.value < 2.0

    def test_matches_extended_precision(self):
        x = [1.0, 2.0, 4.0]
        k = InterpKernel.gaussian(1.0, 2)
        r = interp_gaussian(x, 1.5, k)
        value, deriv = gaussian_interp_mp(x, 1.5, 1.0, 2)
        assert r.value == pytest.approx(value, rel=1e-14)
        assert r.dvalue_dp == pytest.approx(deriv, rel=1e-12)

    def test_window_switch_at_half_integer(self):
        # p = 1.5 is where the window centre moves from 1 to 2; the analytic
        # derivative belongs to the right-hand window, and a central difference
        # straddling the switch averages the two one-sided slopes
        x = [1.0, 2.0, 4.0]
        k = InterpKernel.gaussian(1.0, 2)
        h = 1e-5

        def f(p):
            return interp_gaussian(x, p, k).value

        # second-order one-sided stencils; the value itself is continuous at 1.5
        right = (-3 * f(1.5) + 4 * f(1.5 + h) - f(1.5 + 2 * h)) / (2 * h)
        left = (3 * f(1.5) - 4 * f(1.5 - h) + f(1.5 - 2 * h)) / (2 * h)
        g = interp_gaussian(x, 1.5, k).dvalue_dp
        assert g == pytest.approx(right, rel=1e-7)
        central = finite_diff_grad(lambda v: f(v[0]), [1.5])[0]
        assert central == pytest.approx((left + right) / 2, rel=1e-5)
        assert abs(left - right) > 0.1

    @given(arrays(np.float64, 16, elements=finite), st.floats(1.0, 14.0),
           st.floats(0.3, 2.0), st.sampled_from([2, 3, 4]))
    def test_matches_extended_precision_random(self, x, p, sigma, radius):
        r = interp_gaussian(x, p, InterpKernel.gaussian(sigma, radius))
        value, deriv = gaussian_interp_mp(x, p, sigma, radius, dps=30)
        scale = max(1.0, np.abs(x).max()) / min(sigma, 1.0) ** 2
        assert r.value == pytest.approx(value, abs=1e-12 * scale)
        assert r.dvalue_dp == pytest.approx(deriv, abs=1e-11 * scale)

    @given(arrays(np.float64, st.integers(1, 12), elements=finite), st.floats(-3, 15),
           st.floats(0.2, 3.0))
    def test_weights_normalised_and_positive(self, x, p, sigma):
        r = interp_gaussian(x, p, InterpKernel.gaussian(sigma))
        alphas = np.array([a for _, a in r.weights])
        assert abs(alphas.sum() - 1.0) < 1e-12
        assert np.all(alphas > 0)

    @given(arrays(np.float64, 24, elements=finite), st.integers(5, 13), st.integers(0, 7),
           st.sampled_from([0.5, 1.0, 1.5]))
    def test_translation_equivariance(self, x, base, eighths, sigma):
        k = InterpKernel.gaussian(sigma, 3)
        p = base + eighths / 8.0
        shifted = np.concatenate([[0.0], x])
        a = interp_gaussian(x, p, k)
        b = interp_gaussian(shifted, p + 1.0, k)
        assert a.value == b.value
        assert a.dvalue_dp == b.dvalue_dp

    @pytest.mark.parametrize("q", [3, 7, 10])
    def test_sharp_sigma_limit(self, q):
        x = make_rng(q).standard_normal(16)
        r = interp_gaussian(x, float(q), InterpKernel.gaussian(0.1, 3))
        assert abs(r.value - x[q]) < 1e-8

    def test_dead_zone_contrast(self):
        x = np.zeros(16)
        x[8] = 1.0
        g = interp_gaussian(x, 4.0, InterpKernel.gaussian(1.5, 6)).dvalue_dp
        assert abs(g) > 0
        assert interp_bilinear(x, 4.0).dvalue_dp == 0.0

    def test_padded_points_keep_weight(self):
        x = [1.0, 1.0, 1.0]
        kept = interp_gaussian(x, 0.0, InterpKernel.gaussian(1.0, 2)).value
        renorm = interp_gaussian(x, 0.0, InterpKernel.gaussian(1.0, 2, True)).value
        assert kept < 1.0
        assert renorm == pytest.approx(1.0, abs=1e-15)

    def test_renormalized_gradient(self):
        x = make_rng(1).standard_normal(6)
        k = InterpKernel.gaussian(1.0, 3, True)
        fd = finite_diff_grad(lambda v: interp_gaussian(x, v[0], k).value, [0.7])[0]
        assert interp_gaussian(x, 0.7, k).dvalue_dp == pytest.approx(fd, rel=1e-7)

    def test_needs_gaussian_kernel(self):
        with pytest.raises(ConfigError):
            interp_gaussian([1.0, 2.0], 0.5, InterpKernel.bilinear())


class TestFeatureGradients:
    def test_bilinear(self):
        got = interp_grad_features([1.0, 2.0, 3.0], 0.3, InterpKernel.bilinear())
        assert [q for q, _ in got] == [0, 1]
        np.testing.assert_allclose([a for _, a in got], [0.7, 0.3])

    def test_gaussian_symmetric_at_integer(self):
        got = dict(interp_grad_features(np.arange(12.0), 6.0, InterpKernel.gaussian(1.0, 2)))
        for k in (1, 2):
            assert got[6 - k] == got[6 + k]

    def test_padded_points_excluded(self):
        got = interp_grad_features([1.0, 2.0], 0.2, InterpKernel.gaussian(1.0, 2))
        assert sorted(q for q, _ in got) == [0, 1]

    @given(arrays(np.float64, 10, elements=finite), st.floats(0.0, 9.0), st.floats(0.3, 2.0))
    def test_match_finite_differences(self, x, p, sigma):
        k = InterpKernel.gaussian(sigma)
        fd = finite_diff_grad(lambda v: interp_gaussian(v, p, k).value, x)
        got = np.zeros_like(x)
        for q, a in interp_grad_features(x, p, k):
            got[q] = a
        np.testing.assert_allclose(got, fd, rtol=1e-7, atol=1e-9)


class TestBatchedSample:
    @pytest.mark.parametrize("kernel", [InterpKernel.bilinear(), InterpKernel.gaussian(0.8)])
    def test_backward_matches_finite_differences(self, kernel):
        rng = make_rng(5)
        x = rng.standard_normal((2, 3, 9))
        pos = rng.uniform(-1.5, 9.5, size=(2, 2, 4))
        assume_not_integer = np.abs(pos - np.round(pos)) > 1e-3
        pos = np.where(assume_not_integer, pos, pos + 0.01)
        g = rng.standard_normal((2, 3, 2, 4))

        def loss_x(v):
            return float(np.sum(g * sample(v, pos, kernel).values))

        def loss_p(v):
            return float(np.sum(g * sample(x, v, kernel).values))

        dx, dpos = sample(x, pos, kernel).backward(g)
        np.testing.assert_allclose(dx, finite_diff_grad(loss_x, x), atol=1e-8)
        np.testing.assert_allclose(dpos, finite_diff_grad(loss_p, pos), atol=1e-7)

    def test_matches_scalar_api(self):
        x = make_rng(2).standard_normal(12)
        k = InterpKernel.gaussian(1.2)
        s = sample(x[None, None], np.array([[[3.3, 7.9]]]), k)
        for j, p in enumerate((3.3, 7.9)):
            r = interp_gaussian(x, p, k)
            assert s.values[0, 0, 0, j] == r.value
            assert s.dvalue_dp[0, 0, 0, j] == r.dvalue_dp

