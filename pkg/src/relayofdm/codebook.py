"""Constellations, unitary data matrices and the relay dispersion sets.

Two code families ship:

* ``od2``  -- 2x2 orthogonal design over BPSK, one data matrix per two bits.
* ``qod4`` -- 4x4 quasi-orthogonal design; slots 1-2 use BPSK, slots 3-4 use
  the 90-degree-rotated BPSK alphabet {+j, -j}, which is what makes every
  constructible matrix unitary.

Each relay i owns a dispersion pair (B_i, C_i), exactly one of which is
nonzero.  A ``B`` relay forwards its received block as-is; a ``C`` relay
forwards the conjugated, circularly time-reversed block.  Stacked at the
destination, the forwarded blocks form the same unitary codeword family, so
the per-subcarrier differential recursion survives the relay hop.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np



@dataclass(frozen=True)
class Constellation:
    """Unit-modulus alphabet; point index doubles as the bit label."""

    points: tuple[complex, ...]
    bits_per_symbol: int

    def __post_init__(self):
        if len(self.points) != 2 ** self.bits_per_symbol:
            raise ValueError("alphabet size must be 2**bits_per_symbol")
        if any(abs(abs(p) - 1.0) > 1e-12 for p in self.points):
            raise ValueError("constellation points must be unit modulus")

    def index_of(self, symbol: complex, tol: float = 1e-9) -> int:
        for i, p in enumerate(self.points):
            if abs(symbol - p) <= tol:
                return i
        raise ValueError(f"symbol {symbol!r} is not in the alphabet")


BPSK = Constellation((1.0 + 0.0j, -1.0 + 0.0j), 1)
ROTATED_BPSK = Constellation((1.0j, -1.0j), 1)


def _od_dispersion() -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    i2 = np.eye(2, dtype=np.complex128)
    z2 = np.zeros((2, 2), dtype=np.complex128)
    c2 = np.array([[0, -1], [1, 0]], dtype=np.complex128)
    return ((i2, z2), (z2, c2))


# Fourth-relay forwarding matrix of the 4x4 design: a signed permutation,
# like the other three, so every relay forwards exactly one sub-stream per
# output row and the stacked codeword stays unitary.
QOD_B4 = np.array(
    [[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]], dtype=np.complex128
)

# Variant with an extra +1 at row 4, column 3.  Rejected: that row maps a
# unit-norm input to norm sqrt(2), so relay 4 violates its power budget and
# the stacked codeword is no longer unitary, which breaks the differential
# recursion (see tests/test_codebook.py for the pinned exclusion).
QOD_B4_FIVE_ENTRY = np.array(
    [[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 1, 0]], dtype=np.complex128
)


def _qod_dispersion(b4: np.ndarray) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    i4 = np.eye(4, dtype=np.complex128)
    z4 = np.zeros((4, 4), dtype=np.complex128)
    c2 = np.array(
        [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=np.complex128
    )
    c3 = np.array(
        [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=np.complex128
    )
    return ((i4, z4), (z4, c2), (z4, c3), (np.asarray(b4, dtype=np.complex128), z4))


@dataclass(frozen=True)
class UnitaryCode:
    """A unitary data-matrix family plus the matching relay dispersion set."""

    kind: str
    n_relays: int
    slots: tuple[Constellation, ...]
    dispersion: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        if len(self.slots) != self.n_relays or len(self.dispersion) != self.n_relays:
            raise ValueError("need one constellation slot and one dispersion pair per relay")
        for b, c in self.dispersion:
            b_zero = not np.any(b)
            c_zero = not np.any(c)
            if b_zero == c_zero:
                raise ValueError("exactly one of (B_i, C_i) must be nonzero")

    @property
    def bits_per_codeword(self) -> int:
        return sum(s.bits_per_symbol for s in self.slots)

    def uses_conjugate_branch(self, relay: int) -> bool:
        """True for relays that forward the conjugated time-reversed block."""
        b, _ = self.dispersion[relay]
        return not np.any(b)


def od2() -> UnitaryCode:
    return UnitaryCode("od2", 2, (BPSK, BPSK), _od_dispersion())


def qod4(b4: np.ndarray | None = None) -> UnitaryCode:
    disp = _qod_dispersion(QOD_B4 if b4 is None else b4)
    return UnitaryCode("qod4", 4, (BPSK, BPSK, ROTATED_BPSK, ROTATED_BPSK), disp)


def make_code(kind: str) -> UnitaryCode:
    """Codebook selected by config string."""
    if kind == "od2":
        return od2()
    if kind == "qod4":
        return qod4()
    raise ValueError(f"unknown code kind {kind!r} (expected 'od2' or 'qod4')")


def build_data_matrices(code: UnitaryCode, symbols: np.ndarray) -> np.ndarray:
    """Map symbol columns to unitary data matrices.

    ``symbols`` has shape (R, n); the result has shape (n, R, R), one matrix
    per column, normalized by the column's total symbol energy.
    """
    v = np.asarray(symbols, dtype=np.complex128)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] != code.n_relays:
        raise ValueError(f"expected {code.n_relays} symbols per codeword, got {v.shape[0]}")
    norm = np.sqrt(np.sum(np.abs(v) ** 2, axis=0))
    if code.kind == "od2":
        v1, v2 = v
        rows = np.array([[v1, -np.conj(v2)], [v2, np.conj(v1)]])
    elif code.kind == "qod4":
        v1, v2, v3, v4 = v
        rows = np.array(
            [
                [v1, -np.conj(v2), -np.conj(v3), v4],
                [v2, np.conj(v1), -np.conj(v4), -v3],
                [v3, -np.conj(v4), np.conj(v1), -v2],
                [v4, np.conj(v3), np.conj(v2), v1],
            ]
        )
    else:
        raise ValueError(f"no data-matrix constructor for kind {code.kind!r}")
    return np.moveaxis(rows / norm, 2, 0)


def build_data_matrix(code: UnitaryCode, symbols) -> np.ndarray:
    """Single-codeword version of :func:`build_data_matrices`, with validation."""
    symbols = list(symbols)
    if len(symbols) != code.n_relays:
        raise ValueError(f"expected {code.n_relays} symbols, got {len(symbols)}")
    for slot, sym in zip(code.slots, symbols):
        slot.index_of(sym)
    return build_data_matrices(code, np.array(symbols)[:, None])[0]


def dispersion_matrices(code: UnitaryCode) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    return code.dispersion


def enumerate_codewords(code: UnitaryCode) -> tuple[np.ndarray, np.ndarray]:
    """All data matrices in canonical order.

    Returns ``(matrices, bits)`` where ``matrices`` is (K, R, R), ``bits`` is
    (K, R) and row k holds the per-slot bit labels.  Order is lexicographic
    over the slot bit tuples, which fixes tie-breaking in the ML search.
    """
    combos = list(itertools.product(*[range(len(s.points)) for s in code.slots]))
    bits = np.array(combos, dtype=np.int64)
    symbols = np.array(
        [[code.slots[r].points[c[r]] for c in combos] for r in range(code.n_relays)]
    )
    return build_data_matrices(code, symbols), bits


def bits_to_symbols(bits: np.ndarray, code: UnitaryCode) -> np.ndarray:
    """Direct map, slot by slot: bit 0 -> first point, bit 1 -> second point.

    ``bits`` must hold a whole number of codewords; output shape is (R, n).
    """
    bits = np.asarray(bits, dtype=np.int64).ravel()
    r = code.n_relays
    if bits.size % r != 0:
        raise ValueError(f"bit count {bits.size} not a multiple of {r}")
    grouped = bits.reshape(-1, r).T
    out = np.empty(grouped.shape, dtype=np.complex128)
    for slot_idx, slot in enumerate(code.slots):
        pts = np.asarray(slot.points)
        out[slot_idx] = pts[grouped[slot_idx]]
    return out


def symbols_to_bits(symbols: np.ndarray, code: UnitaryCode) -> np.ndarray:
    """Inverse of :func:`bits_to_symbols` (nearest point per slot)."""
    v = np.asarray(symbols, dtype=np.complex128)
    if v.shape[0] != code.n_relays:
        raise ValueError(f"expected {code.n_relays} rows, got {v.shape[0]}")
    bits = np.empty(v.shape, dtype=np.int64)
    for slot_idx, slot in enumerate(code.slots):
        pts = np.asarray(slot.points)
        dist = np.abs(v[slot_idx][None, :] - pts[:, None])
        bits[slot_idx] = np.argmin(dist, axis=0)
    return bits.T.ravel()
