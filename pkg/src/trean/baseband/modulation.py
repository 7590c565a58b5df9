"""Gray-mapped unit-energy constellations and frame assembly."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import ParameterError
from .pilots import NORMAL, PILOT_ORDERS, PilotPair

BPSK = "bpsk"
QPSK = "qpsk"
QAM16 = "16qam"
QAM64 = "64qam"
MODULATIONS = (BPSK, QPSK, QAM16, QAM64)

_BITS_PER_SYMBOL = {BPSK: 1, QPSK: 2, QAM16: 4, QAM64: 6}


def bits_per_symbol(modulation: str) -> int:
    try:
        return _BITS_PER_SYMBOL[modulation]
    except KeyError:
        raise ParameterError(f"unknown modulation {modulation!r}") from None


def _gray_levels(nbits: int) -> np.ndarray:
    """PAM levels indexed by Gray-decoded bit group: 0 -> -(2^n - 1) ... up."""
    n = 1 << nbits
    levels = np.empty(n)
    for value in range(n):
        gray = value ^ (value >> 1)
        levels[gray] = 2 * value - (n - 1)
    return levels


@lru_cache(maxsize=None)
def constellation(modulation: str) -> tuple[np.ndarray, np.ndarray]:
    """(points, bit table) for a modulation, scaled to unit average energy.

    ``points[k]`` is the symbol for the bit group ``bits[k]``; bit groups are
    MSB first.  BPSK maps bit 0 to +1 and bit 1 to -1.  QPSK and the square
    QAMs split the group evenly between I (first half) and Q (second half),
    each half Gray coded onto ascending PAM levels.
    """
    nb = bits_per_symbol(modulation)
    n = 1 << nb
    groups = np.array(
        [[(k >> (nb - 1 - b)) & 1 for b in range(nb)] for k in range(n)], dtype=np.int8
    )
    if modulation == BPSK:
        points = np.where(groups[:, 0] == 0, 1.0, -1.0).astype(complex)
        return points, groups
    half = nb // 2
    lv = _gray_levels(half)
    idx_i = np.zeros(n, dtype=int)
    idx_q = np.zeros(n, dtype=int)
    for b in range(half):
        idx_i = (idx_i << 1) | groups[:, b]
        idx_q = (idx_q << 1) | groups[:, half + b]
    points = lv[idx_i] + 1j * lv[idx_q]
    points /= np.sqrt(np.mean(np.abs(points) ** 2))
    return points, groups


def map_bits(bits: np.ndarray, modulation: str) -> np.ndarray:
    """Map a bit vector to constellation symbols (MSB-first groups)."""
    bits = np.asarray(bits, dtype=np.int8)
    nb = bits_per_symbol(modulation)
    if bits.ndim != 1 or bits.size % nb != 0:
        raise ParameterError(
            f"bit count {bits.size} is not divisible by {nb} ({modulation})"
        )
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise ParameterError("bits must be 0 or 1")
    points, _ = constellation(modulation)
    idx = np.zeros(bits.size // nb, dtype=int)
    for b in range(nb):
        idx = (idx << 1) | bits[b::nb]
    return points[idx]


def demap_symbols(symbols: np.ndarray, modulation: str) -> np.ndarray:
    """Nearest-point hard decision back to bits."""
    points, groups = constellation(modulation)
    symbols = np.asarray(symbols, dtype=complex)
    dist = np.abs(symbols[:, None] - points[None, :])
    return groups[np.argmin(dist, axis=1)].reshape(-1).astype(np.int8)


@dataclass(frozen=True)
class SymbolFrame:
    """A pilot-wrapped symbol sequence ready for pulse shaping."""

    symbols: np.ndarray
    modulation: str
    pilot_order: str
    pilot_length: int

    @property
    def length(self) -> int:
        return int(self.symbols.size)

    @property
    def n_data_symbols(self) -> int:
        return self.length - 2 * self.pilot_length

    def data_slice(self) -> slice:
        return slice(self.pilot_length, self.length - self.pilot_length)

    def pilot_only_symbols(self) -> np.ndarray:
        """Copy of the symbol vector with the data field zeroed.

        This is what a receiver that has not yet identified the frame can
        assume about it: the two pilot blocks, nothing else.
        """
        out = self.symbols.copy()
        out[self.data_slice()] = 0
        return out


def modulate(
    bits,
    modulation: str,
    pilots: PilotPair,
    pilot_order: str = NORMAL,
) -> SymbolFrame:
    """Wrap Gray-mapped data symbols in the pilot pair."""
    if pilot_order not in PILOT_ORDERS:
        raise ParameterError(f"unknown pilot order {pilot_order!r}")
    data = map_bits(np.asarray(bits), modulation)
    opening, closing = pilots.in_order(pilot_order)
    symbols = np.concatenate(
        [opening.astype(complex), data, closing.astype(complex)]
    )
    return SymbolFrame(symbols, modulation, pilot_order, pilots.length)
