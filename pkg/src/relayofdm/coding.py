"""Repetition coding, block interleaving and soft combining.

An (r, 1) repetition code plus a block interleaver spreads the r copies of
each information bit far apart in the modulated stream, so they ride on
weakly correlated subcarrier channels.  The decoder sums the r soft decision
metrics per bit; the metrics already carry the channel weighting, so the
plain sum is the maximum-ratio combiner.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class InterleaverSpec:
    """Block interleaver geometry: ``depth`` rows by ``repetition`` columns."""

    depth: int
    repetition: int

    def __post_init__(self):
        if self.depth < 1 or self.repetition < 1:
            raise ValueError("interleaver dimensions must be positive")

    @property
    def size(self) -> int:
        return self.depth * self.repetition

    def check_doppler(self, fd_ts: float) -> None:
        """Warn when the depth is too small for independent fading."""
        if fd_ts > 0 and self.depth <= 1.0 / fd_ts:
            warnings.warn(
                f"interleaver depth {self.depth} <= 1/(fD*Ts) = {1.0 / fd_ts:.0f}; "
                "repeated bits may see correlated fading",
                stacklevel=2,
            )


def repeat_encode(bits: np.ndarray, repetition: int) -> np.ndarray:
    """Duplicate each bit ``repetition`` times (row-major interleaver fill)."""
    if repetition < 1:
        raise ValueError("repetition factor must be >= 1")
    return np.repeat(np.asarray(bits), repetition)


def interleave(values: np.ndarray, spec: InterleaverSpec) -> np.ndarray:
    """Write row-major into the depth x r array, read out column-major.

    Short payloads are zero-padded to one full block; use
    :func:`pad_positions` to exclude the padding downstream.
    """
    values = np.asarray(values)
    padded = _pad_to_block(values, spec)
    return padded.reshape(spec.depth, spec.repetition).T.reshape(-1)


def deinterleave(values: np.ndarray, spec: InterleaverSpec) -> np.ndarray:
    """Inverse permutation: fill columns, read rows.

    Returns a (depth, repetition) array: row b holds the ``repetition``
    entries that belong to information bit b.
    """
    values = np.asarray(values)
    if values.size != spec.size:
        raise ValueError(f"expected {spec.size} entries, got {values.size}")
    return values.reshape(spec.repetition, spec.depth).T


def pad_positions(n_values: int, spec: InterleaverSpec) -> np.ndarray:
    """Boolean mask over one block's rows: True where the row is padding."""
    mask = np.zeros(spec.depth, dtype=bool)
    used_rows = (n_values + spec.repetition - 1) // spec.repetition
    mask[used_rows:] = True
    return mask


def _pad_to_block(values: np.ndarray, spec: InterleaverSpec) -> np.ndarray:
    if values.size > spec.size:
        raise ValueError(f"payload {values.size} exceeds one block ({spec.size})")
    if values.size == spec.size:
        return values
    padded = np.zeros(spec.size, dtype=values.dtype)
    padded[: values.size] = values
    return padded


def combine_and_decide(soft_metrics: np.ndarray) -> np.ndarray:
    """MRC-combine r soft metrics per bit and slice to hard bits.

    ``soft_metrics`` is (n_bits, r) complex; decision is on the sign of the
    summed real part, with the zero-sum tie resolved to bit 0.
    """
    soft_metrics = np.atleast_2d(np.asarray(soft_metrics))
    combined = np.sum(soft_metrics.real, axis=-1)
    return (combined < 0).astype(np.int64)
