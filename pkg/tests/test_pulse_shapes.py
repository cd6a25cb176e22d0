import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tls2p.numerics import Grid1D, adaptive_quad
from tls2p.pulse_shapes import Gaussian, RisingExp, Sampled, TwoPhotonInput, evaluate, fourier, overlap


def norm_sq(pulse, lo, hi):
    return adaptive_quad(lambda t: np.abs(pulse.evaluate(t)) ** 2, lo, hi, 1e-12, points=pulse.breakpoints).real


class TestEvaluate:
    def test_rising_exp_vanishes_after_zero(self):
        assert evaluate(RisingExp(0.1), 1.0) == 0

    def test_rising_exp_at_zero_uses_left_value(self):
        np.testing.assert_allclose(evaluate(RisingExp(0.1), 0.0), -math.sqrt(0.1), rtol=1e-14)

    def test_rising_exp_closed_form(self):
        t = np.linspace(-20, 0, 101)
        np.testing.assert_allclose(RisingExp(0.7).evaluate(t), -math.sqrt(0.7) * np.exp(0.35 * t), rtol=1e-14)

    def test_gaussian_peak(self):
        np.testing.assert_allclose(evaluate(Gaussian(1.0), 0.0), (1 / (2 * math.pi)) ** 0.25, rtol=1e-14)

    def test_gaussian_rejects_nonpositive_bandwidth(self):
        with pytest.raises(ValueError):
            Gaussian(0.0)

    @pytest.mark.parametrize("pulse", [Gaussian(1.3, 2.0), RisingExp(0.5), RisingExp(3.0)])
    def test_unit_norm(self, pulse):
        np.testing.assert_allclose(norm_sq(pulse, -np.inf, np.inf), 1.0, atol=1e-9)


class TestFourier:
    def test_rising_exp_lorentzian_at_zero(self):
        np.testing.assert_allclose(fourier(RisingExp(1.0), 0.0), -2 / math.sqrt(2 * math.pi), rtol=1e-14)

    @pytest.mark.parametrize("omega", [0.5, 1.0, 4.0])
    def test_gaussian_parseval(self, omega):
        total = adaptive_quad(lambda w: np.abs(Gaussian(omega).fourier(w)) ** 2, -np.inf, np.inf, 1e-12)
        np.testing.assert_allclose(total.real, 1.0, atol=1e-10)

    def test_transform_matches_direct_quadrature(self):
        pulse = Gaussian(1.2, 0.7)
        for w in (-1.5, 0.0, 2.0):
            direct = adaptive_quad(lambda t: pulse.evaluate(t) * np.exp(-1j * w * t), -np.inf, np.inf, 1e-12)
            np.testing.assert_allclose(pulse.fourier(w), direct / math.sqrt(2 * math.pi), atol=1e-10)

    def test_sampled_rising_exp_matches_closed_form(self):
        grid = Grid1D.from_range(-60.0, 0.0, 6001)
        sampled = Sampled.from_pulse(RisingExp(0.5), grid)
        w = np.linspace(-3, 3, 41)
        np.testing.assert_allclose(sampled.fourier(w), RisingExp(0.5).fourier(w), atol=2e-3)


class TestOverlap:
    def test_self_overlap(self):
        np.testing.assert_allclose(overlap(Gaussian(1.0), Gaussian(1.0)), 1.0, atol=1e-12)

    def test_disjoint_pulses(self):
        assert abs(overlap(Gaussian(1.0), Gaussian(1.0, 20.0))) < 1e-9

    def test_shifted_gaussians(self):
        np.testing.assert_allclose(overlap(Gaussian(1.0), Gaussian(1.0, 1.0)), math.exp(-1 / 8), rtol=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.2, 3.0), st.floats(-3.0, 3.0))
    def test_n2_bounds(self, omega, tau):
        n2 = TwoPhotonInput(Gaussian(omega), Gaussian(omega, tau)).n2
        assert 1.0 <= n2 <= 2.0
        np.testing.assert_allclose(n2, 1 + math.exp(-(omega * tau) ** 2 / 4), rtol=1e-9)

    def test_fock_state_n2(self):
        assert TwoPhotonInput.fock(RisingExp(0.1)).n2 == 2.0


class TestSampled:
    def test_rejects_unnormalized(self):
        grid = Grid1D.from_range(0.0, 1.0, 11)
        with pytest.raises(ValueError):
            Sampled(grid, 2.0 * np.ones(11))

    def test_rejects_nonuniform_times(self):
        with pytest.raises(ValueError):
            Sampled.from_samples([0.0, 0.1, 0.3], [1.0, 1.0, 1.0])

    def test_zero_outside_support(self):
        pulse = Sampled.from_pulse(Gaussian(2.0), Grid1D.from_range(-5.0, 5.0, 201))
        assert pulse.evaluate(np.array([-5.5, 6.0])).tolist() == [0, 0]
