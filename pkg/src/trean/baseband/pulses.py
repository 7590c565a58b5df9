"""Transmit pulse shapes on the internal dense grid.

A pulse lives on ``[0, support_symbols * T]`` and is identically zero
outside.  It is stored sampled at T/16, the toolkit-wide dense grid, so any
delay that is a multiple of T/16 is an exact array shift.  Pulses are
normalized to a peak value of 1, which pins the per-sample SNR convention
used by ``add_awgn``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError

GRID_PER_SYMBOL = 16
HALF_SYMBOL_GRID = GRID_PER_SYMBOL // 2


@dataclass(frozen=True)
class PulseShape:
    name: str
    support_symbols: int            # L_h
    grid_values: np.ndarray         # samples at k*T/16, k = 0..16*L_h
    symbol_period: float = 1.0

    @property
    def peak_symbol(self) -> int:
        """Whole-symbol index of the dominant tap.

        Half-symbol-rate sampling started anywhere inside the first symbol
        lands its strongest sample this many symbols after the frame start;
        boundary detection uses it to back off from the correlation peak to
        the true packet start.
        """
        return int(np.argmax(np.abs(self.grid_values))) // GRID_PER_SYMBOL

    def taps(self, offset_grid: int) -> np.ndarray:
        """Composite taps g(offset + n*T) for n = 0..L_h-1 (grid offset units)."""
        idx = offset_grid + GRID_PER_SYMBOL * np.arange(self.support_symbols)
        valid = (idx >= 0) & (idx < self.grid_values.size)
        out = np.zeros(self.support_symbols)
        out[valid] = self.grid_values[idx[valid]]
        return out

    def energy_per_half_symbol_sample(self) -> float:
        """Mean |g|^2 over one symbol of T/2-spaced samples, phase-averaged.

        This is the pulse-energy constant the energy-accounting check uses:
        a long unit-energy symbol stream sampled at T/2 has mean sample power
        equal to it (up to edge effects).
        """
        total = 0.0
        for phase in range(HALF_SYMBOL_GRID):
            samples = self.grid_values[phase::HALF_SYMBOL_GRID]
            total += float(np.sum(np.abs(samples) ** 2))
        return total / HALF_SYMBOL_GRID / 2.0


def rect_pulse(T: float = 1.0) -> PulseShape:
    """Unit rectangle on [0, T); single-tap, exactly ISI free at T spacing."""
    values = np.ones(GRID_PER_SYMBOL + 1)
    values[-1] = 0.0
    return PulseShape("rect", 1, values, T)


def rrc_pulse(T: float = 1.0, rolloff: float = 0.35, support_symbols: int = 6) -> PulseShape:
    """Root-raised-cosine truncated to ``support_symbols`` and peak-normalized."""
    if not 0 < rolloff < 1:
        raise ParameterError("rolloff must be in (0, 1)")
    if support_symbols < 2 or support_symbols % 2 != 0:
        raise ParameterError("support must be an even symbol count >= 2")
    n = GRID_PER_SYMBOL * support_symbols
    center = support_symbols / 2.0
    t = np.arange(n + 1) / GRID_PER_SYMBOL - center      # in symbols
    b = rolloff
    values = np.empty(t.size)
    for k, x in enumerate(t):
        if abs(x) < 1e-12:
            values[k] = 1.0 + b * (4.0 / np.pi - 1.0)
        elif abs(abs(x) - 1.0 / (4 * b)) < 1e-9:
            values[k] = (b / np.sqrt(2.0)) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * b))
                + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
            )
        else:
            num = np.sin(np.pi * x * (1 - b)) + 4 * b * x * np.cos(np.pi * x * (1 + b))
            den = np.pi * x * (1 - (4 * b * x) ** 2)
            values[k] = num / den
    values /= values.max()
    # support is half-open [0, L_h*T): with the endpoint forced to zero every
    # half-symbol sample of a delayed packet stays inside the L_h-tap model
    values[-1] = 0.0
    return PulseShape("rrc", support_symbols, values, T)


def rc_pulse(T: float = 1.0, rolloff: float = 0.35, support_symbols: int = 6) -> PulseShape:
    """Raised-cosine composite pulse, truncated and peak-normalized.

    This is the default end-to-end pulse: it is what a root-raised-cosine
    transmit filter followed by its matched receive filter produces, and it
    is Nyquist, so one sample per symbol at the peak sees no intersymbol
    interference.
    """
    if not 0 < rolloff < 1:
        raise ParameterError("rolloff must be in (0, 1)")
    if support_symbols < 2 or support_symbols % 2 != 0:
        raise ParameterError("support must be an even symbol count >= 2")
    n = GRID_PER_SYMBOL * support_symbols
    t = np.arange(n + 1) / GRID_PER_SYMBOL - support_symbols / 2.0
    b = rolloff
    values = np.empty(t.size)
    for k, x in enumerate(t):
        den = 1.0 - (2 * b * x) ** 2
        if abs(den) < 1e-9:
            values[k] = (np.pi / 4) * np.sinc(1.0 / (2 * b))
        else:
            values[k] = np.sinc(x) * np.cos(np.pi * b * x) / den
    values /= values.max()
    values[-1] = 0.0
    return PulseShape("rc", support_symbols, values, T)


def get_pulse(name: str, T: float = 1.0) -> PulseShape:
    if name == "rect":
        return rect_pulse(T)
    if name == "rc":
        return rc_pulse(T)
    if name == "rrc":
        return rrc_pulse(T)
    raise ParameterError(f"unknown pulse shape {name!r}")
