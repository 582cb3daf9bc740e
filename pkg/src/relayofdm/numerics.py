"""Complex-vector primitives shared by the whole chain.

Conventions used everywhere in this package:

* DFT/IDFT are unitary (symmetric 1/sqrt(N) normalization on both sides).
* Circular indexing is modulo-N with sample 0 kept fixed by time reversal.
* Sequences are 1-D complex ndarrays; the transforms also accept stacks of
  sequences and operate along the last axis.
"""

from __future__ import annotations

import numpy as np


def dft(x: np.ndarray) -> np.ndarray:
    """Unitary DFT along the last axis: y[n] = (1/sqrt(N)) sum_m x[m] e^{-j2pi mn/N}."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    return np.fft.fft(x, axis=-1) / np.sqrt(n)


def idft(x: np.ndarray) -> np.ndarray:
    """Unitary inverse DFT along the last axis; exact inverse of :func:`dft`."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    return np.fft.ifft(x, axis=-1) * np.sqrt(n)


def circular_convolve(h: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Circular convolution y[n] = sum_l h[l] x[(n-l) mod N].

    ``h`` may be shorter than ``x`` (zero-padded to the right), ``x`` sets N.
    """
    x = np.asarray(x, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    n = x.shape[-1]
    if h.shape[-1] > n:
        raise ValueError(f"filter length {h.shape[-1]} exceeds sequence length {n}")
    hf = np.fft.fft(h, n=n, axis=-1)
    return np.fft.ifft(hf * np.fft.fft(x, axis=-1), axis=-1)


def circular_time_reverse(z: np.ndarray) -> np.ndarray:
    """Index map m -> (-m) mod N: out[0] = z[0], out[m] = z[N-m] for m >= 1.

    Applied along the last axis.  Its conjugate's DFT equals the conjugated
    DFT of the original sequence, which is what lets a relay synthesize the
    conjugate branch of a space-time code in the time domain.
    """
    z = np.asarray(z)
    return np.roll(z[..., ::-1], 1, axis=-1)


def is_unitary(m: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff ||M^H M - I||_F < tol."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    gram = m.conj().T @ m
    return bool(np.linalg.norm(gram - np.eye(m.shape[0])) < tol)
