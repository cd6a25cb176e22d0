import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tls2p.errors import BoundaryLeak
from tls2p.numerics import (
    Grid1D,
    Grid2D,
    adaptive_quad,
    cumexp,
    fourier2d,
    frequency_axis,
    get_profile,
    grid_integral,
    inverse_fourier2d,
)
from tls2p.one_channel import TwoPhotonAmplitude
from tls2p.pulse_shapes import Gaussian, RisingExp


def separable_field(pulse_a, pulse_b, axis):
    t1, t2 = Grid2D.square(axis).mesh()
    values = pulse_a.evaluate(t1) * pulse_b.evaluate(t2)
    return TwoPhotonAmplitude(Grid2D.square(axis), values, "time", 2.0)


class TestGrids:
    def test_from_range_endpoints(self):
        g = Grid1D.from_range(-2.0, 3.0, 11)
        np.testing.assert_allclose(g.points[[0, -1]], [-2.0, 3.0])
        np.testing.assert_allclose(g.step, 0.5)

    def test_frequency_axis_contains_zero(self):
        f = frequency_axis(Grid1D.from_range(0.0, 10.0, 64))
        assert f.node_index(0.0) is not None

    def test_unknown_profile(self):
        with pytest.raises(ValueError):
            get_profile("loose")


class TestAdaptiveQuad:
    def test_zero_integrand(self):
        assert adaptive_quad(lambda x: np.zeros_like(x, dtype=complex), 0.0, 1.0) == 0

    def test_oscillatory_closed_form(self):
        value = adaptive_quad(lambda x: np.exp(1j * x), 0.0, 1.0, 1e-13)
        np.testing.assert_allclose(value, math.sin(1) + 1j * (1 - math.cos(1)), rtol=1e-13)

    def test_lorentzian_normalization(self):
        value = adaptive_quad(lambda w: np.abs(RisingExp(1.0).fourier(w)) ** 2, -np.inf, np.inf, 1e-10)
        np.testing.assert_allclose(value.real, 1.0, atol=1e-6)

    def test_reversed_limits(self):
        f = lambda x: x**2
        np.testing.assert_allclose(adaptive_quad(f, 2.0, 0.0), -8 / 3, rtol=1e-12)

    def test_break_point(self):
        value = adaptive_quad(lambda x: np.where(x < 0.3, 1.0, 0.0), 0.0, 1.0, 1e-12, points=(0.3,))
        np.testing.assert_allclose(value.real, 0.3, rtol=1e-12)


class TestCumexp:
    def test_zero(self):
        grid = Grid1D.from_range(0.0, 1.0, 11)
        assert np.all(cumexp(1.0, np.zeros(11), grid) == 0)

    @pytest.mark.parametrize("a", [0.5, 1.0 + 2.0j, 3.0])
    def test_exponential_closed_form(self, a):
        grid = Grid1D.from_range(-2.0, 3.0, 1001)
        t = grid.points
        expected = np.exp(-a * t) * (np.exp(2 * a * t) - np.exp(2 * a * grid.start)) / (2 * a)
        np.testing.assert_allclose(cumexp(a, np.exp(a * t), grid), expected, atol=1e-8 * np.max(np.abs(expected)))

    @settings(max_examples=20, deadline=None)
    @given(
        st.floats(0.1, 3.0),
        st.floats(-2.0, 2.0),
        st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3),
    )
    def test_agrees_with_adaptive_quad(self, re_a, im_a, coef):
        a = complex(re_a, im_a)
        f = lambda r: coef[0] * np.cos(r) + coef[1] * np.sin(2 * r) + coef[2] * r**2
        grid = Grid1D.from_range(0.0, 2.0, 801)
        running = cumexp(a, f(grid.points), grid)
        for k in (100, 400, 800):
            tk = grid.points[k]
            ref = adaptive_quad(lambda r: np.exp(-a * (tk - r)) * f(r), 0.0, tk, 1e-13)
            np.testing.assert_allclose(running[k], ref, atol=1e-7)


class TestFourier2d:
    axis = Grid1D.from_range(-12.0, 12.0, 256)

    # The bridge is second order in the step; 1e-5 needs a step near 0.01.
    fine = Grid1D.from_range(-10.0, 10.0, 2048)

    def test_separable_gaussian(self):
        a, b = Gaussian(1.0), Gaussian(1.4, 0.5)
        out = fourier2d(separable_field(a, b, self.fine))
        w1, w2 = out.grid.mesh()
        np.testing.assert_allclose(out.values, a.fourier(w1) * b.fourier(w2), atol=1e-5)

    def test_symmetry_preserved(self):
        field = separable_field(Gaussian(1.0), Gaussian(1.0), self.axis)
        sym = TwoPhotonAmplitude(field.grid, field.values + field.values.T, "time", 2.0)
        out = fourier2d(sym)
        np.testing.assert_array_equal(out.values, out.values.T)

    def test_parseval(self):
        field = separable_field(Gaussian(1.0), Gaussian(0.8, 1.0), Grid1D.from_range(-14.0, 14.0, 1536))
        out = fourier2d(field)
        np.testing.assert_allclose(out.grid_norm_sq(), field.grid_norm_sq(), rtol=1e-4)

    def test_round_trip(self):
        field = separable_field(Gaussian(1.0), Gaussian(0.8, 1.0), self.axis)
        back = inverse_fourier2d(fourier2d(field), field.grid)
        np.testing.assert_allclose(back.values, field.values, atol=1e-8)

    def test_round_trip_with_jump_line(self):
        axis = Grid1D.from_range(-60.0, 40.0, 256)
        values = separable_field(RisingExp(0.5), RisingExp(0.5), axis).values
        field = TwoPhotonAmplitude(Grid2D.square(axis), values, "time", 2.0, breakpoints=(0.0,))
        back = inverse_fourier2d(fourier2d(field), field.grid)
        np.testing.assert_allclose(back.values, field.values, atol=1e-8)

    def test_boundary_leak_warns(self):
        field = separable_field(Gaussian(1.0), Gaussian(1.0), Grid1D.from_range(-2.0, 2.0, 64))
        with pytest.warns(BoundaryLeak):
            fourier2d(field)

    def test_decayed_field_is_quiet(self):
        field = separable_field(Gaussian(1.0), Gaussian(1.0), self.axis)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            fourier2d(field)

    def test_rejects_frequency_input(self):
        field = separable_field(Gaussian(1.0), Gaussian(1.0), self.axis)
        with pytest.raises(ValueError):
            fourier2d(fourier2d(field))


class TestGridIntegral:
    def test_product_of_gaussians(self):
        grid = Grid2D.square(Grid1D.from_range(-10.0, 10.0, 201))
        t1, t2 = grid.mesh()
        np.testing.assert_allclose(grid_integral(np.exp(-t1**2 - t2**2), grid).real, math.pi, rtol=1e-10)
