"""Tests for parameters, channel sampling, and the reproducible RNG."""

import math

import numpy as np
import pytest

from swiptsim.model import (
    ChannelRealization,
    EstimateSet,
    RngStream,
    SystemParams,
    beamforming_gain,
    fdd_estimate_noise_vars,
    harvested_power,
    sample_channel,
    sample_fdd_estimates,
    sample_tdd_estimate,
    tdd_estimate_noise_var,
)


class TestSystemParams:
    def test_defaults(self):
        p = SystemParams(n_antennas=3)
        assert p.tx_power == 1.0
        assert p.harvest_efficiency == 0.5
        assert p.coherence_symbols == 1000
        assert p.decode_power == 1e-3
        assert p.pilot_power == 1e-2
        assert p.feedback_power == 1e-2

    def test_snr_round_trip(self):
        p = SystemParams.from_snr_db(3, 17.0)
        assert p.snr_db == pytest.approx(17.0, abs=1e-12)
        assert p.noise_power == pytest.approx(10.0**-1.7)
        q = p.at_snr_db(5.0)
        assert q.snr_db == pytest.approx(5.0, abs=1e-12)
        assert q.n_antennas == 3

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_antennas": 1},
            {"n_antennas": 2.5},
            {"n_antennas": 3, "coherence_symbols": 2},
            {"n_antennas": 3, "noise_power": 0.0},
            {"n_antennas": 3, "tx_power": -1.0},
            {"n_antennas": 3, "decode_power": float("inf")},
            {"n_antennas": 3, "harvest_efficiency": 0.0},
            {"n_antennas": 3, "harvest_efficiency": 1.2},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            SystemParams(**kwargs)

    def test_frozen(self):
        p = SystemParams(n_antennas=3)
        with pytest.raises(AttributeError):
            p.tx_power = 2.0


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(42, 7).uniform(100)
        b = RngStream(42, 7).uniform(100)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(42, 0).uniform(100)
        b = RngStream(42, 1).uniform(100)
        c = RngStream(43, 0).uniform(100)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_substream_offsets_stream_id(self):
        s = RngStream(5, 10)
        np.testing.assert_array_equal(
            s.substream(3).uniform(16), RngStream(5, 13).uniform(16)
        )

    def test_uniform_open_interval_and_mapping(self):
        u = RngStream(0, 0).uniform(200_000)
        assert u.min() > 0.0 and u.max() < 1.0
        # the documented mapping quantizes to odd multiples of 2^-54
        k = u * 2.0**53 - 0.5
        np.testing.assert_allclose(k, np.round(k), atol=1e-6)

    def test_rejects_bad_seed_or_stream(self):
        with pytest.raises(ValueError):
            RngStream(-1)
        with pytest.raises(ValueError):
            RngStream(1.5)
        with pytest.raises(ValueError):
            RngStream(0, -2)

    def test_standard_normal_moments(self):
        z = RngStream(1, 0).standard_normal(400_000)
        assert abs(z.mean()) < 4.0 / math.sqrt(z.size)
        assert abs(z.var() - 1.0) < 0.01

    def test_complex_normal_layout_and_variance(self):
        s = RngStream(9, 0)
        z = s.complex_normal((4, 8), var=2.0)
        assert z.shape == (4, 8)
        # layout contract: all real parts drawn before all imaginary parts
        pair = RngStream(9, 0).standard_normal((2, 4, 8))
        scale = math.sqrt(0.5 * 2.0)
        np.testing.assert_array_equal(z.real, scale * pair[0])
        np.testing.assert_array_equal(z.imag, scale * pair[1])
        big = RngStream(2, 0).complex_normal(200_000, var=3.0)
        assert np.mean(np.abs(big) ** 2) == pytest.approx(3.0, rel=0.01)
        assert abs(np.mean(big.real * big.imag)) < 0.02


class TestChannel:
    def test_sample_channel_scalar_and_batch(self, params3):
        rng = RngStream(0, 0)
        one = sample_channel(params3, rng)
        assert isinstance(one, ChannelRealization)
        assert one.vector.shape == (3,)
        batch = sample_channel(params3, RngStream(0, 1), count=50)
        assert batch.shape == (3, 50)
        assert batch.dtype == np.complex128

    def test_gain_is_squared_norm(self):
        ch = ChannelRealization(np.array([3.0 + 4.0j, 0.0 + 0.0j]))
        assert ch.gain == pytest.approx(25.0)

    def test_gain_distribution_moments(self, params3):
        # |h|^2 is chi-square with 2L degrees of freedom, halved: mean L, var L
        g = np.sum(np.abs(sample_channel(params3, RngStream(3, 0), count=200_000)) ** 2, axis=0)
        assert g.mean() == pytest.approx(3.0, rel=0.01)
        assert g.var() == pytest.approx(3.0, rel=0.05)

    def test_harvested_power_scaling(self, params3):
        assert harvested_power(params3, 6.0) == pytest.approx(
            params3.harvest_efficiency * params3.tx_power * 6.0 / 3.0
        )
        ch = ChannelRealization(np.array([1.0 + 0j, 1.0 + 0j, 1.0 + 0j]))
        assert harvested_power(params3, ch) == pytest.approx(0.5 * 1.0 * 3.0 / 3.0)


class TestEstimates:
    def test_tdd_noise_var_formula(self, params3):
        eta = 0.05
        expected = params3.noise_power / (eta * 1000 * params3.pilot_power)
        assert tdd_estimate_noise_var(params3, eta) == pytest.approx(expected)
        with pytest.raises(ValueError):
            tdd_estimate_noise_var(params3, 0.0)
        with pytest.raises(ValueError):
            tdd_estimate_noise_var(params3, 1.0)

    def test_fdd_noise_var_formulas(self, params3):
        eta, tau = 0.04, 0.06
        ut, fb = fdd_estimate_noise_vars(params3, eta, tau)
        assert ut == pytest.approx(params3.noise_power * 3 / (eta * 1000 * params3.tx_power))
        assert fb == pytest.approx(
            params3.noise_power * 3 / (tau * 1000 * params3.feedback_power)
        )
        with pytest.raises(ValueError):
            fdd_estimate_noise_vars(params3, eta, 0.0)

    def test_tdd_estimate_error_statistics(self, params3):
        eta = 0.02
        rng = RngStream(11, 0)
        h = sample_channel(params3, rng, count=100_000)
        est = sample_tdd_estimate(params3, h, eta, rng.substream(1))
        err = est.ap_estimate - h
        assert est.ut_estimate is None
        var = tdd_estimate_noise_var(params3, eta)
        assert np.mean(np.abs(err) ** 2) == pytest.approx(var, rel=0.02)

    def test_fdd_estimates_nested(self, params3):
        eta, tau = 0.02, 0.03
        rng = RngStream(12, 0)
        h = sample_channel(params3, rng, count=100_000)
        est = sample_fdd_estimates(params3, h, eta, tau, rng.substream(1))
        ut_var, fb_var = fdd_estimate_noise_vars(params3, eta, tau)
        assert np.mean(np.abs(est.ut_estimate - h) ** 2) == pytest.approx(ut_var, rel=0.02)
        assert np.mean(np.abs(est.ap_estimate - est.ut_estimate) ** 2) == pytest.approx(
            fb_var, rel=0.02
        )


class TestBeamformingGain:
    def test_perfect_estimate_recovers_full_gain(self):
        h = np.array([1.0 + 1.0j, 2.0 - 1.0j, 0.5 + 0.0j])
        g = beamforming_gain(h, h)
        assert g == pytest.approx(float(np.sum(np.abs(h) ** 2)))

    def test_orthogonal_estimate_gives_zero(self):
        h = np.array([1.0 + 0j, 0.0 + 0j])
        e = np.array([0.0 + 0j, 1.0 + 0j])
        assert beamforming_gain(h, e) == pytest.approx(0.0)

    def test_scale_invariance_in_estimate(self):
        rng = RngStream(4, 0)
        h = rng.complex_normal(5)
        e = rng.complex_normal(5)
        assert beamforming_gain(h, e) == pytest.approx(beamforming_gain(h, 7.3 * e))

    def test_batch_matches_scalar(self, params3):
        rng = RngStream(6, 0)
        h = sample_channel(params3, rng, count=10)
        est = sample_tdd_estimate(params3, h, 0.05, rng.substream(1))
        g = beamforming_gain(h, est)
        assert g.shape == (10,)
        for i in range(10):
            gi = beamforming_gain(h[:, i], est.ap_estimate[:, i])
            assert g[i] == pytest.approx(gi, rel=1e-14)

    def test_gain_bounded_by_channel_norm(self, params3):
        rng = RngStream(8, 0)
        h = sample_channel(params3, rng, count=1000)
        est = sample_tdd_estimate(params3, h, 0.01, rng.substream(1))
        g = beamforming_gain(h, est)
        norms = np.sum(np.abs(h) ** 2, axis=0)
        assert np.all(g <= norms * (1 + 1e-12))
        assert np.all(g >= 0.0)

    def test_accepts_wrapper_types(self):
        ch = ChannelRealization(np.array([1.0 + 0j, 2.0 + 0j]))
        est = EstimateSet(ap_estimate=np.array([1.0 + 0j, 2.0 + 0j]))
        assert beamforming_gain(ch, est) == pytest.approx(5.0)

    def test_zero_estimate_defined_as_zero(self):
        h = np.array([1.0 + 0j, 1.0 + 0j])
        assert beamforming_gain(h, np.zeros(2, dtype=complex)) == 0.0
