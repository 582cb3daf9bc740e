"""Source-side and relay-side processing.

Source: per-subcarrier differential encoding of unitary data matrices, IDFT,
cyclic prefix, power scaling, serialization.  Relays: matched-filter samples,
prefix strip (which turns the physical linear convolution into a circular
one), dispersion configuration with optional conjugate/time-reversal branch,
amplification, second cyclic prefix.

The physical channel is applied as a *linear* convolution over the serial
stream; circularity only emerges through the prefix mechanism, so an
undersized prefix produces real inter-block interference instead of silently
staying correct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FirChannel, complex_awgn
from .codebook import UnitaryCode
from .numerics import circular_time_reverse, idft

DOMAIN_FREQ = "freq"
DOMAIN_TIME = "time"


@dataclass(frozen=True)
class Frame:
    """One OFDM block: R parallel sequences plus bookkeeping tags."""

    block_index: int
    domain: str
    data: np.ndarray        # (R, N) or (R, N + n_prefix)
    prefixed: bool = False
    n_prefix: int = 0

    def __post_init__(self):
        if self.domain not in (DOMAIN_FREQ, DOMAIN_TIME):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.n_prefix > 0 and not self.prefixed:
            raise ValueError("n_prefix > 0 requires the prefixed flag")
        if self.n_prefix < 0:
            raise ValueError("n_prefix must be nonnegative")

    @property
    def n_relays(self) -> int:
        return self.data.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.data.shape[1] - self.n_prefix


@dataclass(frozen=True)
class DelayProfile:
    """Arrival offsets of the relays at the destination, relative to relay 1.

    ``d`` holds whole-symbol offsets, ``tau`` fractional offsets in units of
    the symbol period.  The destination is timing-locked to relay 1, so the
    first entries are pinned to zero.
    """

    d: tuple[int, ...]
    tau: tuple[float, ...]

    def __post_init__(self):
        if len(self.d) != len(self.tau):
            raise ValueError("d and tau must have one entry per relay")
        if self.d[0] != 0 or self.tau[0] != 0.0:
            raise ValueError("relay 1 defines the timing reference (d1 = tau1 = 0)")
        if any(di < 0 for di in self.d):
            raise ValueError("integer offsets must be nonnegative")
        if any(not 0.0 <= ti <= 1.0 for ti in self.tau):
            raise ValueError("fractional offsets must lie in [0, 1]")

    @property
    def d_max(self) -> int:
        return max(self.d)


def reference_frame(n_relays: int, n_subcarriers: int) -> Frame:
    """Block 0: the unit vector e1 on every subcarrier (known to the receiver)."""
    if n_relays < 2:
        raise ValueError("need at least two relays")
    data = np.zeros((n_relays, n_subcarriers), dtype=np.complex128)
    data[0, :] = 1.0
    return Frame(0, DOMAIN_FREQ, data)


def differential_encode(code: UnitaryCode, matrices: np.ndarray, prev: Frame) -> Frame:
    """s[n]^(k) = V[n]^(k) s[n]^(k-1), one matrix-vector product per subcarrier."""
    if prev.domain != DOMAIN_FREQ or prev.prefixed:
        raise ValueError("differential encoding needs an unprefixed frequency-domain frame")
    matrices = np.asarray(matrices, dtype=np.complex128)
    r, n = prev.data.shape
    if matrices.shape != (n, r, r):
        raise ValueError(f"expected {n} matrices of size {r}x{r}, got {matrices.shape}")
    data = np.einsum("nrs,sn->rn", matrices, prev.data)
    return Frame(prev.block_index + 1, DOMAIN_FREQ, data)


def to_time_domain(frame: Frame) -> Frame:
    """IDFT each of the R sequences."""
    if frame.domain != DOMAIN_FREQ or frame.prefixed:
        raise ValueError("expected an unprefixed frequency-domain frame")
    return Frame(frame.block_index, DOMAIN_TIME, idft(frame.data))


def add_cyclic_prefix(frame: Frame, n_cp: int) -> Frame:
    """Copy the last ``n_cp`` samples of each sequence to its beginning."""
    if frame.domain != DOMAIN_TIME or frame.prefixed:
        raise ValueError("expected an unprefixed time-domain frame")
    n = frame.data.shape[1]
    if not 0 <= n_cp < n:
        raise ValueError(f"prefix length {n_cp} out of range for block length {n}")
    if n_cp == 0:
        return Frame(frame.block_index, DOMAIN_TIME, frame.data, prefixed=True, n_prefix=0)
    data = np.concatenate([frame.data[:, n - n_cp:], frame.data], axis=1)
    return Frame(frame.block_index, DOMAIN_TIME, data, prefixed=True, n_prefix=n_cp)


def strip_cyclic_prefix(data: np.ndarray, n_cp: int) -> np.ndarray:
    """Drop the first ``n_cp`` samples of each sequence."""
    return data[..., n_cp:]


def scale_source(frame: Frame, p0: float, n_relays: int) -> Frame:
    """Multiply every transmitted sample by sqrt(P0 * R).

    The R serial sub-blocks carry per-subcarrier unit-norm vectors, so this
    scaling makes P0 the average transmit power per OFDM symbol.
    """
    if p0 <= 0:
        raise ValueError("source power must be positive")
    return Frame(
        frame.block_index,
        frame.domain,
        frame.data * np.sqrt(p0 * n_relays),
        prefixed=frame.prefixed,
        n_prefix=frame.n_prefix,
    )


def serialize(frame: Frame) -> np.ndarray:
    """Parallel-to-serial: concatenate the R sub-blocks in slot order."""
    return frame.data.reshape(-1)


def relay_receive(
    tx: Frame,
    ch: FirChannel,
    n0: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Samples kept at one relay after matched filtering and prefix strip.

    The source's serial stream passes through the relay's FIR link (linear
    convolution, so sub-block tails really do spill into the next prefix
    region, where they are discarded).  Returns the (R, N) array of per
    sub-block samples; with the prefix long enough these equal the circular
    convolution of the channel with each sub-block, plus CN(0, n0) noise.
    """
    if not tx.prefixed or tx.domain != DOMAIN_TIME:
        raise ValueError("relay input must be a prefixed time-domain frame")
    n_cp = tx.n_prefix
    if n_cp < ch.n_taps - 1:
        raise ValueError(
            f"cyclic prefix {n_cp} shorter than channel memory {ch.n_taps - 1}"
        )
    r = tx.n_relays
    n = tx.n_subcarriers
    stream = serialize(tx)
    conv = np.convolve(stream, ch.taps)
    block = n + n_cp
    out = np.empty((r, n), dtype=np.complex128)
    for sub in range(r):
        start = sub * block + n_cp
        out[sub] = conv[start:start + n]
    return out + complex_awgn(rng, out.shape, n0)


def relay_configure(
    z: np.ndarray,
    code: UnitaryCode,
    relay_index: int,
    amp: float,
) -> np.ndarray:
    """Dispersion at relay i: X = A (B_i Z + C_i conj(Z reversed)), per sample.

    ``z`` is the (R, N) array of kept samples; the reversal is the circular
    time reversal along the sample axis.
    """
    if amp <= 0:
        raise ValueError("amplification factor must be positive")
    z = np.asarray(z, dtype=np.complex128)
    if z.shape[0] != code.n_relays:
        raise ValueError(f"expected {code.n_relays} sub-block rows, got {z.shape[0]}")
    b, c = code.dispersion[relay_index]
    out = np.zeros_like(z)
    if np.any(b):
        out += b @ z
    if np.any(c):
        out += c @ np.conj(circular_time_reverse(z))
    return amp * out


def amplification_factor(p0: float, pr: float, n0: float) -> float:
    """A = sqrt(Pr / (P0 + N0)): fixes the average relay transmit power at Pr."""
    if p0 <= 0 or pr <= 0 or n0 <= 0:
        raise ValueError("powers and noise level must be positive")
    return float(np.sqrt(pr / (p0 + n0)))
