"""Destination processing.

The receiver is built directly at the sampled matched-filter level: each
relay's serial stream goes through its FIR link (linear convolution), is
shifted by the relay's whole-symbol offset, and contributes to every output
sample through the raised-cosine response evaluated at the surviving
side-lobe offsets (window l in [-L_mf, L_mf], shifted by the fractional
offset tau).  Double sampling adds a second, independent-noise sample grid
offset by half a symbol and combines the two with equal gain.

Because the matched filter is anti-causal over L_mf symbols, the receiver
opens each block window L_mf samples early (inside the cyclic prefix) and
circularly re-rotates the window.  That is exactly why the relay prefix must
satisfy  n_cp2 >= (L-1) + d_max + 2*L_mf:  one L_mf for the early window,
d_max + L-1 + L_mf for the deepest reach into the prefix.  Under that
condition every kept sample is a circular mix of the relay blocks and the
per-subcarrier model below is exact, not approximate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, FirChannel, complex_awgn
from .codebook import UnitaryCode
from .numerics import dft
from .txchain import DelayProfile, amplification_factor

MODE_SYMBOL_RATE = "symbol-rate"
MODE_DOUBLE = "double"
SAMPLER_MODES = (MODE_SYMBOL_RATE, MODE_DOUBLE)


@dataclass(frozen=True)
class MatchedFilter:
    """Raised-cosine pulse/matched-filter pair.

    ``n_sidelobes`` is the number of significant side-lobes kept on each side
    of the main lobe.  ``None`` selects the untruncated response (closed-form
    spectral weights); that variant is only available to the analytic model,
    the sampled receiver needs a finite window.
    """

    beta: float = 0.9
    n_sidelobes: int | None = 1

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("roll-off must lie in (0, 1]")
        if self.n_sidelobes is not None and self.n_sidelobes < 0:
            raise ValueError("side-lobe count must be nonnegative")


def raised_cosine(t, beta: float):
    """p(t) = sinc(t) cos(pi beta t) / (1 - (2 beta t)^2), t in symbol periods.

    The removable singularity at |t| = 1/(2 beta) is filled with its limit
    (pi/4) sinc(1/(2 beta)).
    """
    t = np.asarray(t, dtype=float)
    denom = 1.0 - (2.0 * beta * t) ** 2
    singular = np.isclose(denom, 0.0, atol=1e-9)
    safe = np.where(singular, 1.0, denom)
    val = np.sinc(t) * np.cos(np.pi * beta * t) / safe
    limit = (np.pi / 4.0) * np.sinc(np.abs(t))
    out = np.where(singular, limit, val)
    return out if out.ndim else float(out)


def pulse(mf: MatchedFilter, t_over_ts: float) -> float:
    """Matched-filter output value ``t_over_ts`` symbol periods from the peak."""
    return float(raised_cosine(t_over_ts, mf.beta))


def pulse_weights(mf: MatchedFilter, tau: float, half_grid: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Side-lobe taps seen by the sampler for a relay late by ``tau`` symbols.

    Returns ``(offsets, weights)`` with offsets l in [-L_mf, L_mf] and weights
    p(l - tau) for the on-grid samples, or p(l + 1/2 - tau) for the half-grid
    samples of the double-sampling mode.
    """
    if mf.n_sidelobes is None:
        raise ValueError("sampled receiver needs a finite side-lobe window")
    offsets = np.arange(-mf.n_sidelobes, mf.n_sidelobes + 1)
    shift = 0.5 if half_grid else 0.0
    return offsets, raised_cosine(offsets + shift - tau, mf.beta)


def raised_cosine_spectrum(beta: float, f) -> np.ndarray:
    """Frequency response of the raised cosine (symbol-rate-normalized)."""
    f = np.abs(np.asarray(f, dtype=float))
    lo = (1.0 - beta) / 2.0
    hi = (1.0 + beta) / 2.0
    out = np.zeros_like(f)
    out[f <= lo] = 1.0
    roll = (f > lo) & (f < hi)
    out[roll] = 0.5 * (1.0 + np.cos(np.pi / beta * (f[roll] - lo)))
    return out


def pulse_dtft(beta: float, nu: np.ndarray, tau: float) -> np.ndarray:
    """Exact value of sum_l p(l - tau) e^{-j 2 pi nu l} over all integers l.

    Two spectral copies overlap for nu in [0, 1); band-limitation of the
    raised cosine (beta <= 1) kills every other alias term.
    """
    nu = np.asarray(nu, dtype=float)
    p0 = raised_cosine_spectrum(beta, nu)
    p1 = raised_cosine_spectrum(beta, nu - 1.0)
    return p0 * np.exp(-2j * np.pi * nu * tau) + p1 * np.exp(-2j * np.pi * (nu - 1.0) * tau)


def _relay_pulse_factor(mf: MatchedFilter, tau: float, n: int, mode: str) -> np.ndarray:
    """Per-subcarrier factor sum_l w(l) e^{-j 2 pi n l / N} for one relay."""
    nu = np.arange(n) / n
    if mf.n_sidelobes is None:
        factor = pulse_dtft(mf.beta, nu, tau)
        if mode == MODE_DOUBLE:
            factor = factor + pulse_dtft(mf.beta, nu, tau - 0.5)
        return factor
    offsets, weights = pulse_weights(mf, tau)
    phases = np.exp(-2j * np.pi * offsets[:, None] * nu[None, :])
    factor = (weights[:, None] * phases).sum(axis=0)
    if mode == MODE_DOUBLE:
        _, half_w = pulse_weights(mf, tau, half_grid=True)
        factor = factor + (half_w[:, None] * phases).sum(axis=0)
    return factor


def _check_mode(mode: str) -> None:
    if mode not in SAMPLER_MODES:
        raise ValueError(f"unknown sampler mode {mode!r} (expected one of {SAMPLER_MODES})")


def required_prefix(n_taps: int, d_max: int, n_sidelobes: int) -> int:
    """Minimum relay prefix for an ISI-free window: (L-1) + d_max + 2 L_mf."""
    return n_taps - 1 + d_max + 2 * n_sidelobes


def destination_receive(
    x_prefixed: np.ndarray,
    rd_channels: tuple[FirChannel, ...],
    delays: DelayProfile,
    mf: MatchedFilter,
    mode: str,
    n0: float,
    rng: np.random.Generator,
    n_cp2: int,
) -> np.ndarray:
    """Sampled matched-filter output, prefix stripped: the (R, N) array Y.

    ``x_prefixed`` has shape (R relays, R sub-blocks, N + n_cp2).  All relays
    transmit simultaneously; relay i's stream arrives d_i whole symbols plus
    tau_i fractions late.  The window of each sub-block is opened inside the
    prefix and re-rotated (see module docstring), so the result obeys the
    circular superposition model exactly whenever the prefix bound holds.
    """
    _check_mode(mode)
    if mf.n_sidelobes is None:
        raise ValueError("sampled receiver needs a finite side-lobe window")
    x_prefixed = np.asarray(x_prefixed, dtype=np.complex128)
    n_relays, n_sub, block = x_prefixed.shape
    n = block - n_cp2
    if n <= 0:
        raise ValueError("prefix longer than the block itself")
    if len(rd_channels) != n_relays or len(delays.d) != n_relays:
        raise ValueError("need one RD channel and one delay entry per relay")
    lmf = mf.n_sidelobes
    n_taps = max(ch.n_taps for ch in rd_channels)
    need = required_prefix(n_taps, delays.d_max, lmf)
    if n_cp2 < need:
        raise ValueError(
            f"relay prefix {n_cp2} cannot absorb channel memory {n_taps - 1}, "
            f"delay spread {delays.d_max} and {lmf} side-lobe(s); need >= {need}"
        )

    stream_len = n_sub * block
    margin = lmf + delays.d_max + n_taps + 1
    buf_len = stream_len + 2 * margin
    double = mode == MODE_DOUBLE
    grid = np.zeros(buf_len, dtype=np.complex128)
    half = np.zeros(buf_len, dtype=np.complex128) if double else None

    for i in range(n_relays):
        stream = x_prefixed[i].reshape(-1)
        offsets, weights = pulse_weights(mf, delays.tau[i])
        # Combined taps of (pulse side-lobes * FIR link), anchored at d_i - L_mf.
        kernel = np.convolve(weights, rd_channels[i].taps)
        contrib = np.convolve(stream, kernel)
        start = margin + delays.d[i] - lmf
        grid[start:start + contrib.size] += contrib
        if double:
            _, half_w = pulse_weights(mf, delays.tau[i], half_grid=True)
            kernel_h = np.convolve(half_w, rd_channels[i].taps)
            contrib_h = np.convolve(stream, kernel_h)
            half[start:start + contrib_h.size] += contrib_h

    grid[margin:margin + stream_len] += complex_awgn(rng, stream_len, n0)
    combined = grid
    if double:
        half[margin:margin + stream_len] += complex_awgn(rng, stream_len, n0)
        combined = grid + half

    out = np.empty((n_sub, n), dtype=np.complex128)
    for sub in range(n_sub):
        start = margin + sub * block + n_cp2 - lmf
        window = combined[start:start + n]
        out[sub] = np.roll(window, -lmf)
    return out


def strip_and_dft(y_time: np.ndarray) -> np.ndarray:
    """Per-sequence unitary DFT of the kept samples."""
    return dft(np.asarray(y_time, dtype=np.complex128))


@dataclass(frozen=True)
class EffectiveChannel:
    """Per-subcarrier equivalent model of the whole two-hop pipeline.

    ``rd_eff[i, n]`` is the relay-to-destination gain including the integer
    delay phase ramp and the pulse side-lobe mixing; ``cascade[i, n]`` is the
    end-to-end gain (source-relay response, conjugated for conjugate-branch
    relays, times ``rd_eff``).  ``noise_var`` and ``snr`` are per subcarrier,
    conditioned on the drawn RD channels.  The decoder never sees any of
    this; it exists for the oracle check and diagnostic tables.
    """

    rd_eff: np.ndarray     # (R, N)
    cascade: np.ndarray    # (R, N)
    noise_var: np.ndarray  # (N,)
    snr: np.ndarray        # (N,)
    amp: float
    mode: str


def build_effective_channel(
    ch: ChannelRealization,
    delays: DelayProfile,
    mf: MatchedFilter,
    mode: str,
    code: UnitaryCode,
    p0: float,
    pr: float,
    n0: float,
) -> EffectiveChannel:
    """Equivalent gains, noise variance and received SNR per subcarrier."""
    _check_mode(mode)
    n_relays, n = ch.rd_freq.shape
    if len(delays.d) != n_relays:
        raise ValueError("delay profile does not match the channel realization")
    amp = amplification_factor(p0, pr, n0)
    subc = np.arange(n)
    rd_eff = np.empty((n_relays, n), dtype=np.complex128)
    cascade = np.empty((n_relays, n), dtype=np.complex128)
    for i in range(n_relays):
        ramp = np.exp(-2j * np.pi * subc * delays.d[i] / n)
        rd_eff[i] = ch.rd_freq[i] * ramp * _relay_pulse_factor(mf, delays.tau[i], n, mode)
        q_hat = np.conj(ch.sr_freq[i]) if code.uses_conjugate_branch(i) else ch.sr_freq[i]
        cascade[i] = q_hat * rd_eff[i]
    gain_sum = np.sum(np.abs(rd_eff) ** 2, axis=0)
    base = 2.0 if mode == MODE_DOUBLE else 1.0
    noise_var = n0 * (base + amp ** 2 * gain_sum)
    snr = amp ** 2 * p0 * gain_sum / noise_var
    return EffectiveChannel(rd_eff, cascade, noise_var, snr, amp, mode)


def expected_freq_output(
    eff: EffectiveChannel,
    code: UnitaryCode,
    s_freq: np.ndarray,
    p0: float,
) -> np.ndarray:
    """Noiseless model A sqrt(P0 R) S[n] H[n] of the frequency-domain output.

    ``s_freq`` is the source's (R, N) differential state for the block; the
    codeword matrix S[n] stacks one column per relay: the dispersion matrix
    applied to the state, conjugated on conjugate-branch relays.
    """
    s_freq = np.asarray(s_freq, dtype=np.complex128)
    n_relays, n = s_freq.shape
    y = np.zeros((n_relays, n), dtype=np.complex128)
    for i in range(n_relays):
        b, c = code.dispersion[i]
        if code.uses_conjugate_branch(i):
            column = c @ np.conj(s_freq)
        else:
            column = b @ s_freq
        y += column * eff.cascade[i][None, :]
    return eff.amp * np.sqrt(p0 * n_relays) * y


def differential_decode_ml(
    y_k: np.ndarray,
    y_km1: np.ndarray,
    matrices: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustive non-coherent search argmin_V ||y_k - V y_{k-1}|| per subcarrier.

    ``matrices`` is the (K, R, R) enumerated codebook in canonical order;
    ties resolve to the lowest index (argmin semantics).  Returns
    ``(indices, metrics)`` with metrics of shape (K, N).
    """
    y_k = np.asarray(y_k, dtype=np.complex128)
    y_km1 = np.asarray(y_km1, dtype=np.complex128)
    pred = np.einsum("krs,sn->krn", matrices, y_km1)
    metrics = np.linalg.norm(y_k[None, :, :] - pred, axis=1)
    return np.argmin(metrics, axis=0), metrics


def differential_decode_fast(y_k: np.ndarray, y_km1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symbol-by-symbol soft metrics for the 2x2 orthogonal design.

    v1[n] = y1^k y1*^{k-1} + y2*^k y2^{k-1},
    v2[n] = y2^k y1*^{k-1} - y1*^k y2^{k-1}.

    For BPSK the hard decision is the sign of the real part; the metrics are
    channel-weighted, so summing them across repeated transmissions realizes
    maximum-ratio combining.
    """
    y_k = np.asarray(y_k, dtype=np.complex128)
    y_km1 = np.asarray(y_km1, dtype=np.complex128)
    if y_k.shape[0] != 2 or y_km1.shape[0] != 2:
        raise ValueError("fast decoding is defined for the two-relay orthogonal design")
    v1 = y_k[0] * np.conj(y_km1[0]) + np.conj(y_k[1]) * y_km1[1]
    v2 = y_k[1] * np.conj(y_km1[0]) - np.conj(y_k[0]) * y_km1[1]
    return v1, v2
