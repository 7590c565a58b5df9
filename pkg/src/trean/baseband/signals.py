"""Waveform synthesis, channel application, and half-symbol-rate sampling.

The dense internal grid has 16 points per symbol, so the receiver's T/2
sampling (8 grid points) and every admissible packet delay or sampling
offset are exact array shifts; the synthesized superposition is therefore an
exact evaluation of the two-packet model, not a resampled approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ParameterError
from .modulation import SymbolFrame
from .pulses import GRID_PER_SYMBOL, HALF_SYMBOL_GRID, PulseShape


@dataclass(frozen=True)
class ContinuousSignal:
    """Complex samples on the dense T/16 grid, starting at time zero."""

    values: np.ndarray
    symbol_period: float = 1.0

    @property
    def n_grid(self) -> int:
        return int(self.values.size)

    @property
    def duration(self) -> float:
        return self.n_grid / GRID_PER_SYMBOL * self.symbol_period

    def __add__(self, other: "ContinuousSignal") -> "ContinuousSignal":
        if self.symbol_period != other.symbol_period:
            raise ParameterError("signals have different symbol periods")
        n = max(self.n_grid, other.n_grid)
        out = np.zeros(n, dtype=complex)
        out[: self.n_grid] += self.values
        out[: other.n_grid] += other.values
        return ContinuousSignal(out, self.symbol_period)


@dataclass(frozen=True)
class SampleStream:
    """Receiver samples at T/2 spacing; sample i sits at i*T/2 + offset."""

    samples: np.ndarray
    offset_grid: int              # sampling offset in T/16 grid units
    symbol_period: float = 1.0

    @property
    def n(self) -> int:
        return int(self.samples.size)

    def odd(self) -> np.ndarray:
        """Samples 0, 2, 4, ... (the paper-style odd-index sub-stream)."""
        return self.samples[0::2]

    def even(self) -> np.ndarray:
        return self.samples[1::2]


@dataclass(frozen=True)
class ChannelRealization:
    """Composite two-packet channel: fading taps, delay, and sampling offset.

    ``delay_grid`` is the second packet's delay T_d and ``offset_grid`` the
    sampling offset (both in T/16 units).  The derived whole-symbol delay D
    and sub-sample remainder delta follow the decomposition
    T_d - offset = D*T + delta with delta in [0, T/2].
    """

    h_f: complex
    h_s: complex
    delay_grid: int = 0
    offset_grid: int = 0
    snr_db: float | None = None

    def __post_init__(self):
        if not 0 <= self.offset_grid < HALF_SYMBOL_GRID:
            raise ParameterError("sampling offset must be in [0, T/2) on the grid")
        if self.delay_grid < 0:
            raise ParameterError("packet delay must be non-negative")
        rem = self.delay_grid - self.offset_grid
        if rem < 0:
            raise ParameterError("delay smaller than the sampling offset")
        if rem % GRID_PER_SYMBOL > HALF_SYMBOL_GRID:
            raise ParameterError(
                "sub-symbol delay remainder exceeds T/2; regenerate the channel"
            )

    @property
    def delay_symbols(self) -> int:
        """Whole-symbol part D of the relative delay."""
        return (self.delay_grid - self.offset_grid) // GRID_PER_SYMBOL

    @property
    def delta_grid(self) -> int:
        """Sub-symbol remainder delta in grid units, in [0, T/2]."""
        return (self.delay_grid - self.offset_grid) % GRID_PER_SYMBOL

    @classmethod
    def from_symbol_delay(
        cls,
        h_f: complex,
        h_s: complex,
        delay_symbols: int,
        delta_grid: int,
        offset_grid: int = 0,
        snr_db: float | None = None,
    ) -> "ChannelRealization":
        if not 0 <= delta_grid <= HALF_SYMBOL_GRID:
            raise ParameterError("delta must be in [0, T/2] on the grid")
        delay = offset_grid + GRID_PER_SYMBOL * delay_symbols + delta_grid
        return cls(h_f, h_s, delay, offset_grid, snr_db)


def shaped_waveform(
    frame: SymbolFrame, pulse: PulseShape, gain: complex = 1.0, delay_grid: int = 0
) -> ContinuousSignal:
    """Pulse-shaped waveform of one packet, delayed on the grid."""
    train_len = GRID_PER_SYMBOL * (frame.length - 1) + 1
    train = np.zeros(delay_grid + train_len, dtype=complex)
    train[delay_grid::GRID_PER_SYMBOL] = gain * frame.symbols
    values = np.convolve(train, pulse.grid_values)
    return ContinuousSignal(values, pulse.symbol_period)


def synthesize_received(
    frame_f: SymbolFrame,
    frame_s: SymbolFrame,
    pulses: tuple[PulseShape, PulseShape],
    chan: ChannelRealization,
) -> ContinuousSignal:
    """Noiseless superposition of the two packets at the receiving end.

    Noise is deliberately left to a separate ``add_awgn`` pass so tests can
    work with the clean waveform.
    """
    pulse_f, pulse_s = pulses
    if pulse_f.symbol_period != pulse_s.symbol_period:
        raise ParameterError("both pulses must share the symbol period")
    first = shaped_waveform(frame_f, pulse_f, chan.h_f, 0)
    second = shaped_waveform(frame_s, pulse_s, chan.h_s, chan.delay_grid)
    return first + second


def add_awgn(
    signal: ContinuousSignal, snr_db: float | None, seed: int = 0
) -> ContinuousSignal:
    """Add complex white Gaussian noise on the dense grid.

    SNR is defined per receiver sample against a unit-energy constellation
    through a peak-normalized pulse: noise power 10**(-snr_db/10) per complex
    sample.  ``snr_db=None`` disables noise entirely.
    """
    if snr_db is None:
        return replace(signal, values=signal.values.copy())
    if not np.isfinite(snr_db):
        raise ParameterError("snr_db must be finite (use None to disable noise)")
    sigma2 = 10.0 ** (-snr_db / 10.0)
    rng = np.random.default_rng(seed)
    n = signal.n_grid
    noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    noise *= np.sqrt(sigma2 / 2.0)
    return replace(signal, values=signal.values + noise)


def sample_half_symbol(signal: ContinuousSignal, offset_grid: int) -> SampleStream:
    """Sample the dense-grid signal at T/2 spacing starting at the offset."""
    if not isinstance(offset_grid, (int, np.integer)):
        raise ParameterError("sampling offset must be an integer grid count")
    if not 0 <= offset_grid < HALF_SYMBOL_GRID:
        raise ParameterError("sampling offset must be in [0, T/2) on the grid")
    samples = signal.values[offset_grid::HALF_SYMBOL_GRID].copy()
    return SampleStream(samples, int(offset_grid), signal.symbol_period)
