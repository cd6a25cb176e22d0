import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tls2p.errors import GridTooShort, ScaleMismatch
from tls2p.lti_response import EmitterParams
from tls2p.numerics import Grid1D, Grid2D, grid_integral
from tls2p.one_channel import (
    OneChannelScattering,
    TwoPhotonAmplitude,
    default_grid,
    eta_freq,
    eta_time,
    lemma_oracle,
    mixing_kernel,
    nonlinear_term,
    time_density,
    zeta,
)
from tls2p.pulse_shapes import Gaussian, RisingExp, TwoPhotonInput

MATCHED = (EmitterParams(1.0), TwoPhotonInput.fock(RisingExp(1.0)))


class TestZeta:
    def test_matched_rising_exp(self):
        np.testing.assert_allclose(zeta(*MATCHED, 1.0, -1.0), 2 * math.exp(-1) * (1 - math.exp(-1)), rtol=1e-9)

    @pytest.mark.parametrize("p1,p2", [(-1.0, 1.0), (0.5, 0.5)])
    def test_vanishes_off_domain(self, p1, p2):
        assert zeta(*MATCHED, p1, p2) == 0


class TestEtaTime:
    def test_matched_rising_exp_point(self):
        # Both product terms vanish since nu(-1) = 0.
        value = OneChannelScattering(*MATCHED).eta(1.0, -1.0)
        np.testing.assert_allclose(value, -2 * math.exp(-2), rtol=1e-8)
        np.testing.assert_allclose(nonlinear_term(*MATCHED, 1.0, -1.0), -2 * math.exp(-2), rtol=1e-8)

    def test_differs_from_one_sided_term(self):
        solver = OneChannelScattering(*MATCHED)
        assert abs(solver.eta(1.0, -1.0) - solver.zeta(1.0, -1.0)) > 0.5

    def test_weak_coupling_gives_input_product(self):
        a, b = Gaussian(1.0), Gaussian(1.2, 0.5)
        solver = OneChannelScattering(EmitterParams(1e-6), TwoPhotonInput(a, b))
        p1, p2 = np.meshgrid(np.linspace(-4, 4, 9), np.linspace(-4, 4, 9), indexing="ij")
        expected = a.evaluate(p1) * b.evaluate(p2) + a.evaluate(p2) * b.evaluate(p1)
        np.testing.assert_allclose(solver.eta(p1, p2), expected, atol=1e-4)

    def test_grid_symmetry_and_norm(self):
        params, inp = EmitterParams(1.0), TwoPhotonInput.fock(Gaussian(1.46))
        amp = eta_time(params, inp, default_grid(params, inp))
        assert amp.symmetry_error() <= 1e-12
        np.testing.assert_allclose(amp.norm_sq, 2 * inp.n2, rtol=1e-6)
        np.testing.assert_allclose(amp.grid_norm_sq(), 2 * inp.n2, rtol=1e-3)

    @settings(max_examples=6, deadline=None)
    @given(st.floats(0.2, 5.0), st.floats(-2.0, 2.0), st.floats(0.3, 3.0), st.floats(-2.0, 2.0))
    def test_unitarity(self, kappa, detuning, omega, delay):
        inp = TwoPhotonInput(Gaussian(omega), Gaussian(omega, delay))
        norm = OneChannelScattering(EmitterParams(kappa, detuning), inp, "figure").norm_sq()
        np.testing.assert_allclose(norm, 2 * inp.n2, rtol=1e-4)

    def test_short_grid_rejected(self):
        params, inp = EmitterParams(0.1), TwoPhotonInput.fock(Gaussian(1.0))
        with pytest.raises(GridTooShort):
            eta_time(params, inp, Grid2D.square(Grid1D.from_range(-6.0, 6.0, 64)))

    def test_two_peaks_on_diagonal_for_broad_gaussian(self):
        from tls2p.validation import diagonal_peak_count

        params, inp = EmitterParams(1.0), TwoPhotonInput.fock(Gaussian(2.92))
        amp = eta_time(params, inp, profile="figure")
        assert diagonal_peak_count(time_density(amp)) == 2


class TestLemmaOracle:
    def test_matched_rising_exp_point(self):
        np.testing.assert_allclose(lemma_oracle(*MATCHED, 1.0, -1.0), -2 * math.exp(-2), rtol=1e-8)

    def test_gaussian_points(self):
        params, inp = EmitterParams(1.0), TwoPhotonInput.fock(Gaussian(1.46))
        solver = OneChannelScattering(params, inp)
        rng = np.random.default_rng(7)
        for p1, p2 in rng.uniform(-3, 5, size=(5, 2)):
            np.testing.assert_allclose(lemma_oracle(params, inp, p1, p2), solver.eta(p1, p2), rtol=1e-6)

    def test_weak_coupling(self):
        pulse = Gaussian(1.0)
        value = lemma_oracle(EmitterParams(1e-6), TwoPhotonInput.fock(pulse), 0.3, -0.2)
        np.testing.assert_allclose(value, 2 * pulse.evaluate(0.3) * pulse.evaluate(-0.2), atol=1e-4)


class TestMixingKernel:
    def test_origin(self):
        np.testing.assert_allclose(mixing_kernel(EmitterParams(1.0), 0, 0, 0, 0), -16, rtol=1e-15)

    def test_vanishes_at_high_frequency(self):
        assert abs(mixing_kernel(EmitterParams(1.0), 1e9, 0.0, 0.3, -0.1)) < 1e-8

    @settings(max_examples=30, deadline=None)
    @given(*[st.floats(-10, 10)] * 4)
    def test_energy_slot_symmetry(self, w1, w2, m1, m2):
        params = EmitterParams(0.7, 0.2)
        assert mixing_kernel(params, w1, w2, m1, m2) == mixing_kernel(params, w1, w2, m2, m1)


class TestEtaFreq:
    def test_weak_coupling_gives_input_product(self):
        a = RisingExp(0.5)
        # Keep off resonance: G(0) = -1 for every kappa.
        axis = Grid1D.from_range(-2.05, 1.95, 21)
        amp = eta_freq(EmitterParams(1e-6), TwoPhotonInput.fock(a), Grid2D.square(axis))
        w1, w2 = amp.grid.mesh()
        np.testing.assert_allclose(amp.values, 2 * a.fourier(w1) * a.fourier(w2), atol=1e-4)

    def test_symmetric(self):
        axis = Grid1D.from_range(-1.0, 1.0, 15)
        amp = eta_freq(EmitterParams(0.5), TwoPhotonInput.fock(RisingExp(0.1)), Grid2D.square(axis))
        assert amp.symmetry_error() <= 1e-12

    def test_norm_on_wide_window(self):
        params, inp = EmitterParams(1.0), TwoPhotonInput.fock(Gaussian(1.0))
        axis = Grid1D.from_range(-8.0, 8.0, 161)
        amp = eta_freq(params, inp, Grid2D.square(axis))
        np.testing.assert_allclose(amp.grid_norm_sq(), 4.0, rtol=1e-3)


class TestTimeDensity:
    def setup_method(self):
        params, inp = EmitterParams(1.0), TwoPhotonInput.fock(Gaussian(1.46))
        self.amp = eta_time(params, inp, default_grid(params, inp))

    def test_normalized_integrates_to_one(self):
        total = grid_integral(time_density(self.amp), self.amp.grid).real
        np.testing.assert_allclose(total, 1.0, atol=1e-3)

    def test_fock_scale_is_half(self):
        np.testing.assert_allclose(time_density(self.amp, "paper_fock"), time_density(self.amp) / 2, rtol=1e-15)

    def test_fock_scale_requires_fock_input(self):
        amp = TwoPhotonAmplitude(self.amp.grid, self.amp.values, "time", 1.5)
        with pytest.raises(ScaleMismatch):
            time_density(amp, "paper_fock")

    def test_zero_field(self):
        amp = TwoPhotonAmplitude(self.amp.grid, np.zeros(self.amp.grid.shape), "time", 2.0)
        assert not time_density(amp).any()
