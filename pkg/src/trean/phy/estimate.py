"""Joint least-squares estimation of both packets' composite channel taps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, RankDeficient

COND_LIMIT = 1e8


@dataclass(frozen=True)
class ConvMatrices:
    """Banded convolution matrices of the two symbol sequences.

    ``c_f`` has row k (0-based) holding c_F[k], c_F[k-1], ..., zero-padded
    outside [0, L); ``c_s`` is the same band shifted down by the whole-symbol
    delay D.  ``c_est`` stacks the first and last L_p rows of [c_f | c_s]:
    with the pilot blocks bracketing each packet these rows are (up to a few
    edge entries) functions of the training sequences only.
    """

    c_f: np.ndarray
    c_s: np.ndarray
    c_est: np.ndarray
    delay_symbols: int
    pilot_length: int

    @property
    def taps(self) -> int:
        return int(self.c_f.shape[1])

    @property
    def joint(self) -> np.ndarray:
        return np.hstack([self.c_f, self.c_s])


def _band_matrix(symbols: np.ndarray, rows: int, taps: int, shift: int) -> np.ndarray:
    length = symbols.size
    mat = np.zeros((rows, taps), dtype=complex)
    for q in range(taps):
        lo = shift + q
        hi = min(rows, lo + length)
        if hi > lo:
            mat[lo:hi, q] = symbols[: hi - lo]
    return mat


def build_conv_matrices(
    c_f: np.ndarray,
    c_s: np.ndarray,
    taps: int,
    delay_symbols: int,
    pilot_length: int,
) -> ConvMatrices:
    """Build the per-packet convolution bands and the estimation stack."""
    if delay_symbols < 0:
        raise ParameterError("whole-symbol delay must be non-negative")
    if taps < 1:
        raise ParameterError("tap count must be at least 1")
    c_f = np.asarray(c_f, dtype=complex)
    c_s = np.asarray(c_s, dtype=complex)
    if c_f.size != c_s.size:
        raise ParameterError("both packets must have the same symbol count")
    rows = c_f.size + delay_symbols
    mat_f = _band_matrix(c_f, rows, taps, 0)
    mat_s = _band_matrix(c_s, rows, taps, delay_symbols)
    if 2 * pilot_length > rows:
        raise ParameterError("pilot windows longer than the packet span")
    joint = np.hstack([mat_f, mat_s])
    c_est = np.vstack([joint[:pilot_length], joint[rows - pilot_length :]])
    return ConvMatrices(mat_f, mat_s, c_est, delay_symbols, pilot_length)


@dataclass(frozen=True)
class ChannelEstimate:
    """Estimated composite taps per packet and per sample phase."""

    h_f_odd: np.ndarray
    h_f_even: np.ndarray
    h_s_odd: np.ndarray
    h_s_even: np.ndarray
    condition_number: float

    @property
    def taps(self) -> int:
        return int(self.h_f_odd.size)

    def merged(self, which: str) -> np.ndarray:
        """Odd/even taps of one packet interleaved to T/2 spacing."""
        odd = self.h_f_odd if which == "f" else self.h_s_odd
        even = self.h_f_even if which == "f" else self.h_s_even
        out = np.empty(2 * odd.size, dtype=complex)
        out[0::2] = odd
        out[1::2] = even
        return out


def joint_estimate(y1: np.ndarray, y2: np.ndarray, matrices: ConvMatrices) -> ChannelEstimate:
    """Least-squares solve for both packets' taps on each sample phase.

    ``y1``/``y2`` are the first and last 2*L_p interleaved receiver samples,
    i.e. the stretches that coincide with the opening pilot of the first
    packet and the closing pilot of the second.
    """
    y1 = np.asarray(y1, dtype=complex)
    y2 = np.asarray(y2, dtype=complex)
    lp = matrices.pilot_length
    if y1.size != 2 * lp or y2.size != 2 * lp:
        raise ParameterError("each window must hold 2*L_p samples")
    cond = float(np.linalg.cond(matrices.c_est))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise RankDeficient(cond)
    taps = matrices.taps
    sol = np.empty((2, 2 * taps), dtype=complex)
    for phase, (a, b) in enumerate(((y1[0::2], y2[0::2]), (y1[1::2], y2[1::2]))):
        rhs = np.concatenate([a, b])
        sol[phase], *_ = np.linalg.lstsq(matrices.c_est, rhs, rcond=None)
    return ChannelEstimate(
        h_f_odd=sol[0, :taps],
        h_f_even=sol[1, :taps],
        h_s_odd=sol[0, taps:],
        h_s_even=sol[1, taps:],
        condition_number=cond,
    )
