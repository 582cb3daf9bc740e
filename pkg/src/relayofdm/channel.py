"""Frequency-selective Rayleigh links and AWGN.

Each link (source->relay or relay->destination) is an L-tap FIR filter whose
taps fade independently.  A tap is synthesized as a sum of complex-Gaussian
weighted Doppler oscillators,

    h(t) = sigma / sqrt(2M) * sum_m (c_m e^{j w_m t} + d_m e^{-j w_m t}),

with w_m = 2*pi*fD*Ts*cos(alpha_m) and structured-random arrival angles
alpha_m.  Because the oscillator amplitudes are i.i.d. CN(0,1), the marginal
of h(t) is exactly CN(0, sigma^2) at every t, and the ensemble autocorrelation
is exactly J0(2*pi*fD*Ts*lag) (isotropic-scattering contract).  fD*Ts = 0
degenerates to a static channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_OSCILLATORS = 16


def complex_awgn(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with the given total variance."""
    if variance < 0:
        raise ValueError("noise variance must be nonnegative")
    if variance == 0.0:
        return np.zeros(shape, dtype=np.complex128)
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def add_awgn(seq: np.ndarray, n0: float, rng: np.random.Generator) -> np.ndarray:
    """Add white complex Gaussian noise of total variance ``n0`` per sample."""
    seq = np.asarray(seq, dtype=np.complex128)
    return seq + complex_awgn(rng, seq.shape, n0)


@dataclass(frozen=True)
class TapProfile:
    """Per-tap power profile; powers are normalized to sum to one."""

    variances: tuple[float, ...]

    def __post_init__(self):
        if len(self.variances) < 1:
            raise ValueError("need at least one tap")
        if any(v < 0 for v in self.variances):
            raise ValueError("tap variances must be nonnegative")
        if abs(sum(self.variances) - 1.0) > 1e-12:
            raise ValueError("tap variances must sum to 1")

    @property
    def n_taps(self) -> int:
        return len(self.variances)

    @classmethod
    def uniform(cls, n_taps: int) -> "TapProfile":
        """Equal power split across ``n_taps`` paths (flat fading for n_taps=1)."""
        return cls(tuple([1.0 / n_taps] * n_taps))


@dataclass(frozen=True)
class FirChannel:
    """One fading FIR link: current taps plus the Doppler oscillator state."""

    taps: np.ndarray          # (L,) complex, current realization
    sigma: np.ndarray         # (L,) per-tap standard deviations
    cos_aoa: np.ndarray       # (L, M) cos of oscillator arrival angles
    amp_pos: np.ndarray       # (L, M) complex CN(0,1) amplitudes, e^{+jwt} branch
    amp_neg: np.ndarray       # (L, M) complex CN(0,1) amplitudes, e^{-jwt} branch
    time: float = 0.0         # current time in symbol periods

    @property
    def n_taps(self) -> int:
        return self.taps.shape[0]


def _taps_at(sigma, cos_aoa, amp_pos, amp_neg, t: float, fd_ts: float) -> np.ndarray:
    m = cos_aoa.shape[1]
    phase = 2.0 * np.pi * fd_ts * t * cos_aoa
    rot = np.exp(1j * phase)
    mix = (amp_pos * rot + amp_neg * np.conj(rot)).sum(axis=1)
    return sigma * mix / np.sqrt(2.0 * m)


def sample_channel(
    profile: TapProfile,
    rng: np.random.Generator,
    n_oscillators: int = DEFAULT_OSCILLATORS,
) -> FirChannel:
    """Draw a fresh link; tap l is marginally CN(0, profile.variances[l])."""
    length = profile.n_taps
    m = n_oscillators
    sigma = np.sqrt(np.asarray(profile.variances, dtype=float))
    # Structured-random angles on (0, pi/2): a shared uniform offset per tap
    # makes the ensemble autocorrelation exactly J0 for any oscillator count.
    theta = rng.uniform(-np.pi, np.pi, size=(length, 1))
    idx = np.arange(1, m + 1, dtype=float)
    alpha = (2.0 * np.pi * idx - np.pi + theta) / (4.0 * m)
    amp_pos = complex_awgn(rng, (length, m), 1.0)
    amp_neg = complex_awgn(rng, (length, m), 1.0)
    cos_aoa = np.cos(alpha)
    taps = _taps_at(sigma, cos_aoa, amp_pos, amp_neg, 0.0, 0.0)
    return FirChannel(taps, sigma, cos_aoa, amp_pos, amp_neg, 0.0)


def evolve_jakes(ch: FirChannel, elapsed_symbols: float, fd_ts: float) -> FirChannel:
    """Advance the fading process by ``elapsed_symbols`` at normalized Doppler ``fd_ts``."""
    if fd_ts < 0:
        raise ValueError("normalized Doppler must be nonnegative")
    t = ch.time + elapsed_symbols
    taps = _taps_at(ch.sigma, ch.cos_aoa, ch.amp_pos, ch.amp_neg, t, fd_ts)
    return FirChannel(taps, ch.sigma, ch.cos_aoa, ch.amp_pos, ch.amp_neg, t)


def to_subcarrier(ch: FirChannel, n_subcarriers: int) -> np.ndarray:
    """Per-subcarrier response: H[n] = sum_l taps[l] e^{-j2pi nl/N} (plain sum, no 1/sqrt(N))."""
    if ch.n_taps > n_subcarriers:
        raise ValueError("more taps than subcarriers")
    return np.fft.fft(ch.taps, n=n_subcarriers)


@dataclass(frozen=True)
class ChannelRealization:
    """All 2R links of one network draw plus their per-subcarrier responses."""

    sr: tuple[FirChannel, ...]    # source -> relay i
    rd: tuple[FirChannel, ...]    # relay i -> destination
    sr_freq: np.ndarray           # (R, N) DFT of SR taps
    rd_freq: np.ndarray           # (R, N) DFT of RD taps

    @property
    def n_relays(self) -> int:
        return len(self.sr)

    @classmethod
    def draw(
        cls,
        n_relays: int,
        n_subcarriers: int,
        sr_profile: TapProfile,
        rd_profile: TapProfile,
        rng: np.random.Generator,
        n_oscillators: int = DEFAULT_OSCILLATORS,
    ) -> "ChannelRealization":
        sr = tuple(sample_channel(sr_profile, rng, n_oscillators) for _ in range(n_relays))
        rd = tuple(sample_channel(rd_profile, rng, n_oscillators) for _ in range(n_relays))
        return cls._with_freq(sr, rd, n_subcarriers)

    @classmethod
    def _with_freq(cls, sr, rd, n_subcarriers: int) -> "ChannelRealization":
        sr_freq = np.stack([to_subcarrier(ch, n_subcarriers) for ch in sr])
        rd_freq = np.stack([to_subcarrier(ch, n_subcarriers) for ch in rd])
        return cls(sr, rd, sr_freq, rd_freq)

    def evolved(self, elapsed_symbols: float, fd_ts: float) -> "ChannelRealization":
        """All links advanced by the same elapsed time."""
        n = self.sr_freq.shape[1]
        if fd_ts == 0.0:
            return self
        sr = tuple(evolve_jakes(ch, elapsed_symbols, fd_ts) for ch in self.sr)
        rd = tuple(evolve_jakes(ch, elapsed_symbols, fd_ts) for ch in self.rd)
        return self._with_freq(sr, rd, n)
