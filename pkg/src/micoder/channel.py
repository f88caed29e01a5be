"""Complex AWGN channel, power normalization, SNR conversions, capacity.

Conventions used throughout the package:

- sigma^2 is the *total* complex noise variance; real and imaginary
  noise parts are each N(0, sigma^2 / 2).
- With unit signal power Es = 1 and rate R bits per complex channel
  use: sigma^2 = 1 / (R * 10^(EbN0_dB / 10)). This convention is pinned
  by the QAM self-consistency acceptance test.
- Power normalization averages |x_i|^2 over the batch *and* the signal
  dimension, so the unit-power constraint holds for the batch mean, not
  per codeword. Evaluation reports the worst per-codeword power so the
  distinction stays visible.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInputError, SpecError
from .rng import make_rng, normal


@dataclass
class ChannelParams:
    noise_variance: float  # total complex variance sigma^2
    seed: int = 0

    def __post_init__(self):
        if self.noise_variance < 0:
            raise SpecError("noise variance must be >= 0")


@dataclass
class SnrSpec:
    """Either a linear SNR, or Eb/N0 in dB (value or (lo, hi) range) + rate."""

    snr_linear: float | None = None
    ebn0_db: float | tuple | None = None
    rate: float | None = None

    def __post_init__(self):
        if (self.snr_linear is None) == (self.ebn0_db is None):
            raise SpecError("specify exactly one of snr_linear / ebn0_db")
        if self.ebn0_db is not None:
            if self.rate is None or self.rate <= 0:
                raise SpecError("Eb/N0 form requires rate > 0")
            if isinstance(self.ebn0_db, tuple):
                lo, hi = self.ebn0_db
                if lo > hi:
                    raise SpecError(f"bad Eb/N0 range [{lo}, {hi}]")

    @property
    def is_range(self):
        return isinstance(self.ebn0_db, tuple)


class AwgnChannel:
    """y = x + z with z circularly symmetric complex Gaussian.

    Owns its own counter-based RNG stream: reconstructing with the same
    params and replaying the same call sequence reproduces the noise.
    """

    def __init__(self, params: ChannelParams, stream: int = 0):
        self.params = params
        self._rng = make_rng(params.seed, stream)

    def transmit(self, x: np.ndarray, noise_variance: float | None = None):
        sigma2 = self.params.noise_variance if noise_variance is None else noise_variance
        if sigma2 < 0:
            raise SpecError("noise variance must be >= 0")
        if sigma2 == 0.0:
            return np.array(x, copy=True)
        scale = np.sqrt(sigma2 / 2.0)
        re = normal(self._rng, x.shape)
        im = normal(self._rng, x.shape)
        return x + scale * (re + 1j * im)


def awgn_transmit(x: np.ndarray, params: ChannelParams) -> np.ndarray:
    """One-shot transmission with a fresh RNG seeded from params."""
    return AwgnChannel(params).transmit(x)


def normalize_power(x: np.ndarray) -> np.ndarray:
    """Scale a complex batch to unit mean power over batch and dimension."""
    mean_power = np.mean(np.abs(x) ** 2)
    if mean_power == 0.0:
        raise DegenerateInputError("all-zero batch cannot be power-normalized")
    return x / np.sqrt(mean_power)


def noise_variance_from_snr(spec: SnrSpec) -> float:
    """sigma^2 for a fixed SnrSpec (ranges must be sampled, see trainer)."""
    if spec.snr_linear is not None:
        if spec.snr_linear <= 0:
            raise SpecError("linear SNR must be > 0")
        return 1.0 / spec.snr_linear
    if spec.is_range:
        raise SpecError("range spec has no single noise variance; sample it")
    return ebn0_db_to_noise_variance(spec.ebn0_db, spec.rate)


def ebn0_db_to_noise_variance(ebn0_db: float, rate: float) -> float:
    if rate <= 0:
        raise SpecError("rate must be > 0")
    return 1.0 / (rate * 10.0 ** (ebn0_db / 10.0))


def snr_linear_from_noise_variance(sigma2: float) -> float:
    return 1.0 / sigma2


def capacity_awgn(snr_linear: float) -> float:
    """AWGN capacity log2(1 + snr) in bits per complex channel use."""
    if snr_linear < 0:
        raise SpecError("SNR must be >= 0")
    return float(np.log2(1.0 + snr_linear))
