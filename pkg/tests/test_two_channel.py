import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tls2p.lti_response import TwoChannelParams
from tls2p.numerics import Grid1D, Grid2D
from tls2p.pulse_shapes import Gaussian, RisingExp, TwoPhotonInput
from tls2p.two_channel import (
    PAIRS,
    ChannelResolvedAmplitude,
    T_ij_freq,
    TwoChannelScattering,
    appendix_oracle,
    channel_probabilities,
    chi,
    default_grid,
    eta_ij_time,
    hom_difference,
    mixing_prefactors,
)

EQUAL = TwoChannelParams.equal(1.0)
MATCHED = TwoPhotonInput.fock(RisingExp(1.0))


class TestChi:
    def test_origin(self):
        np.testing.assert_allclose(chi(EQUAL, RisingExp(1.0), 0.0, 0.0), -8 / 9, rtol=1e-9)

    def test_vanishes_before_diagonal(self):
        assert chi(EQUAL, RisingExp(1.0), -1.0, 0.5) == 0

    def test_weak_coupling(self):
        assert abs(chi(TwoChannelParams.equal(1e-6), Gaussian(1.0), 0.4, -0.3)) < 1e-5

    def test_requires_equal_coupling(self):
        with pytest.raises(ValueError):
            chi(TwoChannelParams(1.0, 2.0), RisingExp(1.0), 0.0, 0.0)


class TestEtaTime:
    def test_equal_coupling_fock_channels_match(self):
        inp = TwoPhotonInput.fock(RisingExp(0.4))
        params = TwoChannelParams.equal(0.3)
        fld = eta_ij_time(params, inp, default_grid(params, inp, 128))
        np.testing.assert_array_equal(fld.eta11, fld.eta22)

    def test_split_channel_vanishes_after_arrival(self):
        params = TwoChannelParams.equal(0.5)
        inp = TwoPhotonInput.fock(RisingExp(0.5))
        solver = TwoChannelScattering(params, inp)
        p = np.linspace(0.05, 10.0, 25)
        p1, p2 = np.meshgrid(p, p, indexing="ij")
        assert np.max(np.abs(solver.amplitude("12", p1, p2))) <= 1e-8

    def test_weak_coupling_keeps_channels(self):
        a, b = Gaussian(1.0), Gaussian(1.0, 0.8)
        solver = TwoChannelScattering(TwoChannelParams.equal(1e-6), TwoPhotonInput(a, b))
        p1, p2 = np.meshgrid(np.linspace(-3, 4, 8), np.linspace(-3, 4, 8), indexing="ij")
        np.testing.assert_allclose(solver.amplitude("12", p1, p2), a.evaluate(p1) * b.evaluate(p2), atol=1e-4)
        assert np.max(np.abs(solver.amplitude("11", p1, p2))) < 1e-4
        assert np.max(np.abs(solver.amplitude("22", p1, p2))) < 1e-4

    def test_same_channel_symmetric(self):
        params = TwoChannelParams(0.5, 1.5)
        inp = TwoPhotonInput(Gaussian(1.0), Gaussian(1.3, 1.0))
        fld = eta_ij_time(params, inp, default_grid(params, inp, 128))
        errors = fld.symmetry_errors()
        assert errors["11"] <= 1e-8 and errors["22"] <= 1e-8

    @pytest.mark.parametrize("kappas", [(0.5, 0.5), (0.4, 1.3), (2.0, 0.7)])
    def test_general_path_matches_closed_form(self, kappas):
        params = TwoChannelParams(*kappas)
        inp = TwoPhotonInput(Gaussian(1.2), RisingExp(0.8))
        grid = default_grid(params, inp, 96)
        closed = eta_ij_time(params, inp, grid, path="closed")
        general = eta_ij_time(params, inp, grid, path="general")
        for name in PAIRS:
            np.testing.assert_allclose(general.pair(name), closed.pair(name), atol=1e-10)

    def test_equal_path_matches_general(self):
        params = TwoChannelParams.equal(0.5)
        inp = TwoPhotonInput.fock(Gaussian(1.0))
        grid = default_grid(params, inp, 96)
        equal = eta_ij_time(params, inp, grid, path="equal")
        general = eta_ij_time(params, inp, grid, path="general")
        for name in PAIRS:
            np.testing.assert_allclose(equal.pair(name), general.pair(name), atol=1e-10)

    def test_equal_path_needs_equal_coupling(self):
        params = TwoChannelParams(1.0, 2.0)
        inp = TwoPhotonInput.fock(Gaussian(1.0))
        with pytest.raises(ValueError):
            eta_ij_time(params, inp, default_grid(params, inp, 32), path="equal")


class TestProbabilities:
    @settings(max_examples=8, deadline=None)
    @given(st.floats(0.1, 4.0), st.floats(0.1, 4.0), st.floats(0.3, 3.0), st.floats(-2.0, 2.0))
    def test_total_is_one(self, k1, k2, omega, delay):
        inp = TwoPhotonInput(Gaussian(omega), Gaussian(omega, delay))
        probs = TwoChannelScattering(TwoChannelParams(k1, k2), inp, "figure").probabilities()
        np.testing.assert_allclose(sum(probs), 1.0, atol=1e-3)

    def test_weak_coupling(self):
        inp = TwoPhotonInput(Gaussian(1.0), Gaussian(1.0, 1.0))
        probs = TwoChannelScattering(TwoChannelParams.equal(1e-6), inp).probabilities()
        np.testing.assert_allclose(probs, (0, 1, 0), atol=1e-5)

    def test_equal_coupling_balance(self):
        params, inp = TwoChannelParams.equal(0.1), TwoPhotonInput.fock(RisingExp(0.1))
        p11, _, p22 = TwoChannelScattering(params, inp).probabilities()
        np.testing.assert_allclose(p11, p22, rtol=1e-12)

    def test_grid_fallback_matches_exact(self):
        params, inp = TwoChannelParams(0.6, 1.1), TwoPhotonInput.fock(Gaussian(1.0))
        fld = eta_ij_time(params, inp, default_grid(params, inp))
        bare = ChannelResolvedAmplitude(fld.grid, fld.eta11, fld.eta12, fld.eta22, "time", fld.breakpoints)
        np.testing.assert_allclose(channel_probabilities(bare), channel_probabilities(fld), atol=2e-3)


class TestFrequencyDomain:
    def test_prefactors_equal_coupling(self):
        c = mixing_prefactors(TwoChannelParams.equal(0.5))
        for name in PAIRS:
            np.testing.assert_allclose(c[name], 1 / (math.pi * 0.5), rtol=1e-15)

    def test_mixing_vanishes_at_high_frequency(self):
        params, inp = TwoChannelParams(0.5, 0.8), TwoPhotonInput.fock(Gaussian(1.0))
        grid = Grid2D.square(Grid1D.from_range(1e6, 1e6 + 1.0, 8))
        fld = T_ij_freq(params, inp, grid)
        assert max(np.max(np.abs(fld.pair(n))) for n in PAIRS) < 1e-10

    def test_weak_coupling_hom_nonpositive(self):
        inp = TwoPhotonInput.fock(RisingExp(0.1))
        axis = Grid1D.from_range(-0.51, 0.49, 51)
        fld = T_ij_freq(TwoChannelParams.equal(1e-6), inp, Grid2D.square(axis))
        assert np.all(hom_difference(fld) <= 1e-9)

    def test_hom_rejects_time_domain(self):
        params, inp = TwoChannelParams.equal(1.0), TwoPhotonInput.fock(Gaussian(1.0))
        with pytest.raises(ValueError):
            hom_difference(eta_ij_time(params, inp, default_grid(params, inp, 32)))


class TestAppendixOracle:
    def test_equal_coupling_points(self):
        solver = TwoChannelScattering(EQUAL, MATCHED)
        rng = np.random.default_rng(11)
        for (p1, p2), (i, j) in zip(rng.uniform(-3, 3, size=(9, 2)), [(1, 1), (1, 2), (2, 2)] * 3):
            expected = solver.amplitude(f"{i}{j}", p1, p2)
            # The split amplitude is exactly zero in the quadrant p1, p2 > 0.
            np.testing.assert_allclose(appendix_oracle(EQUAL, MATCHED, i, j, p1, p2), expected, rtol=1e-5, atol=1e-10)

    def test_split_vanishes_for_positive_times(self):
        assert abs(appendix_oracle(EQUAL, MATCHED, 1, 2, 0.7, 1.9)) < 1e-8

    def test_weak_coupling_product(self):
        a = Gaussian(1.0)
        value = appendix_oracle(TwoChannelParams.equal(1e-6), TwoPhotonInput.fock(a), 1, 2, 0.2, -0.4)
        np.testing.assert_allclose(value, a.evaluate(0.2) * a.evaluate(-0.4), atol=1e-4)
