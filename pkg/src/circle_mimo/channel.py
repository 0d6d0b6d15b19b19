"""mmWave channel model: ULA steering vectors, LoS + NLoS fading, noise/SNR.

The base station carries a half-wavelength-spaced uniform linear array.
A device channel is one line-of-sight path plus a configurable number of
weaker non-line-of-sight paths; departure angles are physical (shared by
all subcarriers), complex gains are drawn independently per subcarrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArrayGeometry",
    "ChannelProfile",
    "ChannelRealization",
    "NoiseModel",
    "array_response",
    "db_to_linear",
    "sample_channel",
    "snr_db",
]


def db_to_linear(db: float) -> float:
    """Convert a power quantity in dB to linear scale."""
    return float(10.0 ** (db / 10.0))


@dataclass(frozen=True)
class ArrayGeometry:
    """Array size plus the OFDM frequency plan.

    Subcarrier m (1-based) sits at f_m = f_c + B*(2m - 1 - M) / (2M), so the
    M subcarriers are centered on the carrier.  Narrowband operation is
    M = 1 with zero bandwidth, in which case f_1 equals the carrier.
    """

    n_antennas: int
    carrier_freq_hz: float
    bandwidth_hz: float = 0.0
    n_subcarriers: int = 1
    cp_len: int = 0

    def __post_init__(self):
        if self.n_antennas < 1:
            raise ValueError("n_antennas must be positive")
        if self.carrier_freq_hz <= 0:
            raise ValueError("carrier_freq_hz must be positive")
        if self.bandwidth_hz < 0:
            raise ValueError("bandwidth_hz must be nonnegative")
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be positive")
        if self.cp_len < 0:
            raise ValueError("cp_len must be nonnegative")
        if self.subcarrier_freq_hz(1) <= 0:
            raise ValueError("lowest subcarrier frequency must be positive")

    @property
    def is_narrowband(self) -> bool:
        return self.n_subcarriers == 1 and self.bandwidth_hz == 0.0

    def subcarrier_freq_hz(self, m: int) -> float:
        """Frequency of subcarrier m, 1-based."""
        if not 1 <= m <= self.n_subcarriers:
            raise ValueError(f"subcarrier {m} out of range 1..{self.n_subcarriers}")
        mm = self.n_subcarriers
        return self.carrier_freq_hz + self.bandwidth_hz * (2 * m - 1 - mm) / (2 * mm)


@dataclass(frozen=True)
class ChannelProfile:
    """Fading statistics: LoS gain variance, NLoS variance and path count,
    and the angular domain [0, angular_range) the departure angles live in."""

    los_var: float = 1.0
    nlos_var: float = 0.0
    n_nlos: int = 0
    angular_range: float = 2.0 * math.pi

    def __post_init__(self):
        if self.los_var < 0 or self.nlos_var < 0:
            raise ValueError("gain variances must be nonnegative")
        if self.n_nlos < 0:
            raise ValueError("n_nlos must be nonnegative")
        if not 0 < self.angular_range <= 2.0 * math.pi:
            raise ValueError("angular_range must lie in (0, 2*pi]")

    @property
    def mean_channel_gain(self) -> float:
        """E[|h_p|^2] for a single antenna element."""
        return self.los_var + self.n_nlos * self.nlos_var


@dataclass(frozen=True)
class ChannelRealization:
    """One device's channel across all subcarriers.

    ``h[m0]`` is the length-N channel of subcarrier m0+1 and always equals
    the LoS term plus the sum of NLoS terms for that subcarrier.
    """

    device: int
    los_gain: np.ndarray        # (M,) complex
    los_aod: float              # radians, frequency independent
    nlos_gains: np.ndarray      # (M, L) complex
    nlos_aods: np.ndarray       # (L,) radians
    h: np.ndarray               # (M, N) complex

    def subcarrier(self, m: int) -> np.ndarray:
        """Channel vector of subcarrier m, 1-based."""
        return self.h[m - 1]


@dataclass(frozen=True)
class NoiseModel:
    variance: float = 1.0   # sigma^2
    tx_power: float = 1.0   # p_t

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("noise variance must be nonnegative")
        if self.tx_power < 0:
            raise ValueError("tx power must be nonnegative")


def array_response(geometry: ArrayGeometry, theta: float, m: int = 1) -> np.ndarray:
    """Steering vector of the ULA for departure angle theta on subcarrier m.

    Entry p (0-based) is exp(i*pi*(f_m/f_c)*p*sin(theta)).  Antenna spacing
    is half the carrier wavelength, so the phase slope scales with the
    subcarrier-to-carrier frequency ratio; at m = 1 with zero bandwidth this
    reduces to the familiar narrowband steering vector.  Entries are unit
    modulus, hence ||a||^2 = N for every angle.
    """
    ratio = geometry.subcarrier_freq_hz(m) / geometry.carrier_freq_hz
    p = np.arange(geometry.n_antennas)
    return np.exp(1j * np.pi * ratio * p * np.sin(theta))


def sample_channel(
    geometry: ArrayGeometry,
    device: int,
    rng: np.random.Generator,
    profile: ChannelProfile = ChannelProfile(),
) -> ChannelRealization:
    """Draw one channel realization for a device.

    The LoS departure angle and all NLoS angles are uniform on
    [0, angular_range) and shared across subcarriers; gains are circular
    complex Gaussian, independent across subcarriers and paths.  Draw order
    is fixed (angles first, then per-subcarrier gains) so a seeded generator
    reproduces the realization bit for bit.
    """
    mm = geometry.n_subcarriers
    ll = profile.n_nlos

    theta = float(rng.uniform(0.0, profile.angular_range))
    nlos_aods = rng.uniform(0.0, profile.angular_range, size=ll)

    los_gain = _complex_normal(rng, profile.los_var, (mm,))
    nlos_gains = _complex_normal(rng, profile.nlos_var, (mm, ll))

    h = np.empty((mm, geometry.n_antennas), dtype=complex)
    for m0 in range(mm):
        vec = los_gain[m0] * array_response(geometry, theta, m0 + 1)
        for l0 in range(ll):
            vec = vec + nlos_gains[m0, l0] * array_response(geometry, nlos_aods[l0], m0 + 1)
        h[m0] = vec

    return ChannelRealization(
        device=device,
        los_gain=los_gain,
        los_aod=theta,
        nlos_gains=nlos_gains,
        nlos_aods=nlos_aods,
        h=h,
    )


def snr_db(noise: NoiseModel, h: np.ndarray) -> float:
    """Received SNR in dB for the deterministic-precoder transmission.

    With a unitary slot precoder and unit-variance symbols the expected
    received signal power is p_t*||h||^2/N, so the SNR is
    10*log10(p_t*||h||^2 / (N*sigma^2)).
    """
    if noise.variance == 0:
        raise ValueError("SNR is undefined for zero noise variance")
    h = np.asarray(h)
    n = h.shape[-1]
    power = noise.tx_power * float(np.sum(np.abs(h) ** 2)) / n
    return 10.0 * math.log10(power / noise.variance)


def _complex_normal(rng: np.random.Generator, var: float, shape) -> np.ndarray:
    """CN(0, var) draws: real and imaginary parts i.i.d. N(0, var/2).

    Draws are always consumed, even for var = 0, so realizations with
    different variances but the same seed stay coupled draw for draw.
    """
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * math.sqrt(var / 2.0)
