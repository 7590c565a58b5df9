"""Orthogonal antipodal pilot pairs for packet framing."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError

NORMAL = "normal"
SWAPPED = "swapped"
PILOT_ORDERS = (NORMAL, SWAPPED)


@dataclass(frozen=True)
class PilotPair:
    """Two mutually orthogonal +/-1 training sequences of equal length.

    ``preamble`` opens and ``postamble`` closes a frame in the normal order;
    a station told to swap them transmits the postamble first.
    """

    preamble: np.ndarray
    postamble: np.ndarray

    def __post_init__(self):
        pre = np.asarray(self.preamble, dtype=float)
        post = np.asarray(self.postamble, dtype=float)
        object.__setattr__(self, "preamble", pre)
        object.__setattr__(self, "postamble", post)
        if pre.shape != post.shape or pre.ndim != 1:
            raise ParameterError("pilot sequences must be 1-D and equally long")
        if not (np.all(np.abs(pre) == 1) and np.all(np.abs(post) == 1)):
            raise ParameterError("pilot sequences must be antipodal (+/-1)")
        if abs(float(pre @ post)) > 1e-12:
            raise ParameterError("pilot sequences must be exactly orthogonal")

    @property
    def length(self) -> int:
        return int(self.preamble.size)

    def in_order(self, order: str) -> tuple[np.ndarray, np.ndarray]:
        """(opening, closing) sequences for a given transmit order."""
        if order == NORMAL:
            return self.preamble, self.postamble
        if order == SWAPPED:
            return self.postamble, self.preamble
        raise ParameterError(f"unknown pilot order {order!r}")


def _sylvester_hadamard(order: int) -> np.ndarray:
    h = np.ones((1, 1), dtype=np.int64)
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


def make_pilot_pair(length: int, seed: int = 0) -> PilotPair:
    """Build an orthogonal +/-1 pilot pair of a power-of-two length.

    Two distinct rows of the Sylvester-Hadamard matrix are chosen with a
    seeded draw (the all-ones row is excluded) and both are multiplied by a
    shared seeded +/-1 scrambling mask.  The mask cancels in the inner
    product, so orthogonality stays exact, while it whitens the rows'
    otherwise periodic structure: bare Walsh rows have shifted
    autocorrelations close to full scale, which would fake packet boundaries
    one symbol off the true one.
    """
    if length < 8 or length & (length - 1) != 0:
        raise ParameterError(f"pilot length must be a power of two >= 8, got {length}")
    rows = _sylvester_hadamard(length)
    rng = random.Random(seed)
    i, j = rng.sample(range(1, length), 2)
    mask = np.array([1 if rng.random() < 0.5 else -1 for _ in range(length)])
    return PilotPair((rows[i] * mask).astype(float), (rows[j] * mask).astype(float))
