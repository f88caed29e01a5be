import numpy as np
import pytest

from micoder.channel import (
    AwgnChannel,
    ChannelParams,
    SnrSpec,
    capacity_awgn,
    ebn0_db_to_noise_variance,
    noise_variance_from_snr,
    normalize_power,
)
from micoder.exceptions import DegenerateInputError, SpecError
from micoder.rng import make_rng, normal


class TestAwgn:
    def test_noiseless_passthrough(self):
        x = (make_rng(1).normal(size=(10, 2)) + 1j * make_rng(2).normal(size=(10, 2)))
        y = AwgnChannel(ChannelParams(0.0, 3)).transmit(x)
        assert np.array_equal(x, y)

    def test_unit_variance_law_of_large_numbers(self):
        x = np.zeros((100_000, 1), dtype=complex)
        y = AwgnChannel(ChannelParams(1.0, 7)).transmit(x)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(1.0, abs=0.02)

    def test_same_seed_identical(self):
        x = np.ones((50, 3), dtype=complex)
        y1 = AwgnChannel(ChannelParams(0.5, 11)).transmit(x)
        y2 = AwgnChannel(ChannelParams(0.5, 11)).transmit(x)
        assert np.array_equal(y1, y2)

    def test_noise_statistics(self):
        sigma2 = 0.7
        y = AwgnChannel(ChannelParams(sigma2, 5)).transmit(np.zeros((200_000, 1), dtype=complex))
        for part in (y.real, y.imag):
            assert np.var(part) == pytest.approx(sigma2 / 2, rel=0.02)
            assert abs(np.mean(part)) < 0.01 * np.sqrt(sigma2)

    def test_negative_variance_rejected(self):
        with pytest.raises(SpecError):
            ChannelParams(-0.1)


class TestNormalizePower:
    def test_unit_power_result(self):
        x = make_rng(3).normal(size=(64, 2)) + 1j * make_rng(4).normal(size=(64, 2))
        out = normalize_power(x)
        assert np.mean(np.abs(out) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_idempotent(self):
        x = make_rng(5).normal(size=(16, 1)) + 1j * make_rng(6).normal(size=(16, 1))
        once = normalize_power(x)
        twice = normalize_power(once)
        np.testing.assert_allclose(once, twice, atol=1e-12)

    def test_magnitude_two_halved(self):
        x = 2.0 * np.exp(1j * np.linspace(0, 3, 8))[:, None]
        np.testing.assert_allclose(normalize_power(x), x / 2, atol=1e-12)

    def test_scale_invariant(self):
        x = make_rng(8).normal(size=(10, 2)) + 1j * make_rng(9).normal(size=(10, 2))
        np.testing.assert_allclose(normalize_power(x), normalize_power(3.7 * x), atol=1e-12)

    def test_all_zero_rejected(self):
        with pytest.raises(DegenerateInputError):
            normalize_power(np.zeros((4, 1), dtype=complex))


class TestSnrConversion:
    def test_linear_snr_one(self):
        assert noise_variance_from_snr(SnrSpec(snr_linear=1.0)) == 1.0

    def test_ebn0_7db_rate4(self):
        sigma2 = noise_variance_from_snr(SnrSpec(ebn0_db=7.0, rate=4.0))
        assert sigma2 == pytest.approx(1.0 / (4.0 * 10**0.7))
        assert sigma2 == pytest.approx(0.049881, abs=1e-6)

    def test_ebn0_0db_rate1(self):
        assert noise_variance_from_snr(SnrSpec(ebn0_db=0.0, rate=1.0)) == pytest.approx(1.0)

    def test_monte_carlo_snr_crosscheck(self):
        # measured SNR of a unit-power batch matches the conversion
        sigma2 = ebn0_db_to_noise_variance(7.0, 4.0)
        rng = make_rng(13)
        x = (normal(rng, (200_000, 1)) + 1j * normal(rng, (200_000, 1))) / np.sqrt(2)
        y = AwgnChannel(ChannelParams(sigma2, 14)).transmit(x)
        noise_power = np.mean(np.abs(y - x) ** 2)
        measured_snr = np.mean(np.abs(x) ** 2) / noise_power
        assert measured_snr == pytest.approx(1.0 / sigma2, rel=0.02)

    def test_bad_specs(self):
        with pytest.raises(SpecError):
            SnrSpec(ebn0_db=7.0, rate=0.0)
        with pytest.raises(SpecError):
            SnrSpec(ebn0_db=(14.0, 10.0), rate=1.0)
        with pytest.raises(SpecError):
            SnrSpec()
        with pytest.raises(SpecError):
            SnrSpec(snr_linear=1.0, ebn0_db=7.0, rate=1.0)


class TestCapacity:
    def test_anchor_values(self):
        assert capacity_awgn(0.0) == 0.0
        assert capacity_awgn(1.0) == pytest.approx(1.0)
        assert capacity_awgn(15.0) == pytest.approx(4.0)

    def test_negative_rejected(self):
        with pytest.raises(SpecError):
            capacity_awgn(-0.5)

    def test_increasing_and_concave(self):
        grid = np.linspace(0.0, 50.0, 201)
        c = np.array([capacity_awgn(s) for s in grid])
        diffs = np.diff(c)
        assert (diffs > 0).all()
        assert (np.diff(diffs) < 1e-12).all()
