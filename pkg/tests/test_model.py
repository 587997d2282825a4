"""Channel-model and decoding-math unit tests."""

import math

import numpy as np
import pytest
from scipy.integrate import quad as adaptive_quad

from harqlab.model import (SystemConfig, GainSample, capacity_cdf,
                           capacity_pdf, conditional_bler_approx,
                           conditional_bler_exact, q_function,
                           round_blers_approx, round_blers_exact, rng_stream,
                           sample_gain, sample_gains, split_streams)

# Q(1) from high-precision quadrature of the Gaussian tail integral
# (mpmath, 40 digits):
Q_AT_1 = 0.15865525393145705141


def cfg_uniform(snr_db=20.0, m=3, l=50, r=5.0, lam=1.0):
    return SystemConfig.uniform_snr(snr_db, max_rounds=m, blocklength=l,
                                    rate=r, gain_mean=lam)


class TestQFunction:
    def test_zero_is_half(self):
        assert q_function(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_frozen_tail_value(self):
        assert abs(q_function(1.0) - Q_AT_1) <= 1e-12

    def test_deep_tail_and_monotone(self):
        assert q_function(40.0) < 1e-300
        # strictly decreasing wherever 1 - Q is representable in doubles
        grid = np.linspace(-8.0, 30.0, 2001)
        vals = q_function(grid)
        assert np.all(np.diff(vals) < 0)
        wide = q_function(np.linspace(-40.0, 41.0, 163))
        assert np.all(np.diff(wide) <= 0)

    def test_symmetry(self):
        for x in np.linspace(-8, 8, 41):
            assert abs(q_function(x) + q_function(-x) - 1.0) <= 1e-12

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            q_function(np.nan)
        with pytest.raises(ValueError):
            q_function(np.array([1.0, np.inf]))


class TestConditionalBler:
    def test_capacity_equals_rate_gives_half(self):
        cfg = cfg_uniform(m=1)
        snr = cfg.snr_linear[0]
        g = (2.0 ** cfg.rate - 1.0) / snr
        assert conditional_bler_exact([g], cfg) == pytest.approx(0.5, abs=1e-12)

    def test_zero_gain_limit_is_one(self):
        cfg = cfg_uniform(m=1)
        eps = round_blers_exact(np.array([[0.0]]), cfg.snr_linear, cfg)
        assert eps[0, 0] == 1.0

    def test_tiny_gain_is_one(self):
        cfg = cfg_uniform(m=1)
        assert conditional_bler_exact([1e-300], cfg) == 1.0

    def test_decreasing_in_each_gain(self):
        cfg = cfg_uniform(m=3)
        base = np.array([0.2, 0.3, 0.4])
        e0 = conditional_bler_exact(base, cfg)
        for i in range(3):
            bumped = base.copy()
            bumped[i] *= 1.3
            assert conditional_bler_exact(bumped, cfg) < e0

    def test_approx_blers_decreasing_in_each_gain(self):
        cfg = cfg_uniform(m=3)
        base = np.array([0.2, 0.3, 0.4])
        e0 = round_blers_approx(base[None, :], cfg.snr_linear, cfg)[0, -1]
        for i in range(3):
            bumped = base.copy()
            bumped[i] *= 1.3
            e1 = round_blers_approx(bumped[None, :], cfg.snr_linear,
                                    cfg)[0, -1]
            assert e1 < e0

    def test_exact_meets_approx_at_high_received_snr(self):
        cfg = cfg_uniform(snr_db=30.0, m=3)
        rng = rng_stream(3)
        for _ in range(50):
            gains = 100.0 / cfg.snr_linear * (1.0 + rng.random(3))
            e_exact = round_blers_exact(gains[None, :], cfg.snr_linear, cfg)
            e_approx = round_blers_approx(gains[None, :], cfg.snr_linear, cfg)
            assert np.max(np.abs(e_exact - e_approx)) <= 1e-3

    def test_approx_kernel_values(self):
        cfg = cfg_uniform(m=2)
        assert conditional_bler_approx(cfg.rate, 1, cfg) == pytest.approx(0.5)
        assert conditional_bler_approx(50.0, 2, cfg) < 1e-12
        assert conditional_bler_approx(0.0, 1, cfg) > 0.5

    def test_approx_kernel_frozen_point(self):
        # (R=5, L=50, m=1, y=6): argument 1/V with V = log2(e)/sqrt(50);
        # expected from the high-precision Gaussian tail oracle
        cfg = cfg_uniform(m=1)
        expected = 4.76045202388787e-07
        assert conditional_bler_approx(6.0, 1, cfg) == pytest.approx(
            expected, abs=1e-12)

    def test_round_index_validation(self):
        cfg = cfg_uniform(m=2)
        with pytest.raises(ValueError):
            conditional_bler_approx(1.0, 0, cfg)
        with pytest.raises(ValueError):
            conditional_bler_approx(1.0, 3, cfg)
        with pytest.raises(ValueError):
            conditional_bler_exact([], cfg)


class TestCapacityDistribution:
    def test_support(self):
        cfg = cfg_uniform()
        assert capacity_pdf(-1.0, 1, cfg) == 0.0
        assert capacity_cdf(0.0, 1, cfg) == 0.0
        assert capacity_cdf(3000.0, 1, cfg) == pytest.approx(1.0)

    def test_pdf_integrates_to_one(self):
        cfg = cfg_uniform(snr_db=12.0)
        total, err = adaptive_quad(lambda x: capacity_pdf(x, 2, cfg),
                                   0.0, 40.0, limit=200)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_pdf_origin_limit(self):
        cfg = SystemConfig.uniform_snr(0.0, max_rounds=1, blocklength=50,
                                       rate=5.0)
        assert capacity_pdf(1e-9, 1, cfg) == pytest.approx(np.log(2.0),
                                                           rel=1e-6)

    def test_pdf_is_cdf_derivative(self):
        # 20 dB keeps the CDF well away from saturation over [0.1, 10],
        # so the central difference stays clear of the cancellation floor
        cfg = cfg_uniform(snr_db=20.0)
        h = 1e-5
        for x in np.linspace(0.1, 10.0, 67):
            diff = (capacity_cdf(x + h, 1, cfg)
                    - capacity_cdf(x - h, 1, cfg)) / (2 * h)
            assert diff == pytest.approx(capacity_pdf(x, 1, cfg), rel=1e-6)

    def test_cdf_monotone(self):
        cfg = cfg_uniform()
        grid = np.linspace(0.0, 20.0, 400)
        assert np.all(np.diff(capacity_cdf(grid, 1, cfg)) >= 0)


class TestSampling:
    def test_inverse_cdf_fixed_point(self):
        class StubRng:
            def random(self):
                return 1.0 - math.exp(-1.0)
        lam = 2.5
        assert sample_gain(StubRng(), lam) == pytest.approx(lam, rel=1e-12)

    def test_small_uniform_small_gain(self):
        class StubRng:
            def random(self):
                return 1e-12
        assert 0.0 < sample_gain(StubRng(), 1.0) < 1e-11

    def test_empirical_mean(self):
        lam = 0.7
        draws = sample_gains(rng_stream(11), lam, 10 ** 6)
        se = draws.std(ddof=1) / math.sqrt(len(draws))
        assert abs(draws.mean() - lam) <= 3 * se

    def test_streams_are_deterministic_and_independent(self):
        a = [g.random() for g in split_streams(5, 4)]
        b = [g.random() for g in split_streams(5, 4)]
        assert a == b
        assert len(set(a)) == 4


class TestConfigValidation:
    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            SystemConfig(max_rounds=0, blocklength=50, rate=5.0, snr_db=())
        with pytest.raises(ValueError):
            SystemConfig(max_rounds=1, blocklength=50, rate=-1.0,
                         snr_db=(10.0,))
        with pytest.raises(ValueError):
            SystemConfig(max_rounds=2, blocklength=50, rate=5.0,
                         snr_db=(10.0,))
        with pytest.raises(ValueError):
            SystemConfig(max_rounds=1, blocklength=50, rate=5.0,
                         snr_db=(10.0,), info_bits=100.0)

    def test_rate_info_bits_consistency(self):
        cfg = SystemConfig(max_rounds=1, blocklength=50, rate=5.0,
                           snr_db=(10.0,), info_bits=250.0)
        assert cfg.info_bits == 250.0

    def test_gain_sample_validation(self):
        with pytest.raises(ValueError):
            GainSample(gains=())
        with pytest.raises(ValueError):
            GainSample(gains=(1.0, -2.0))
