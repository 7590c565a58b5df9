"""Geometric probabilities for the hidden-region throughput model."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ParameterError


def circle_intersection_area(r1: float, r2: float, d: float) -> float:
    """Area of the lens shared by two circles of radii r1, r2 at distance d."""
    if r1 < 0 or r2 < 0 or d < 0:
        raise ParameterError("radii and distance must be non-negative")
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        r = min(r1, r2)
        return math.pi * r * r
    a1 = r1 * r1 * math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    a2 = r2 * r2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    k = 0.5 * math.sqrt(
        (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    )
    return a1 + a2 - k


def hidden_region_area(r_c: float, r_i: float, r_s: float) -> float:
    """Area inside the receiver's interference disk but outside the
    transmitter's sensing disk, transmitter and receiver one communication
    radius apart."""
    if not r_c <= r_i <= r_s:
        raise ParameterError("expected r_c <= r_i <= r_s")
    return max(math.pi * r_i * r_i - circle_intersection_area(r_i, r_s, r_c), 0.0)


def hidden_region_count(density: float, r_c: float, r_i: float, r_s: float) -> float:
    """Expected station count n_h in one hidden region."""
    if density < 0:
        raise ParameterError("density must be non-negative")
    return density * hidden_region_area(r_c, r_i, r_s)


def _disk_points(rng: np.random.Generator, radius: float, count: int) -> np.ndarray:
    r = radius * np.sqrt(rng.random(count))
    phi = 2 * np.pi * rng.random(count)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def disk_pair_prob(
    r_s: float, threshold: float, samples: int = 1_000_000, seed: int = 0
) -> tuple[float, float]:
    """Monte-Carlo P(two uniform points in a disk are farther than threshold).

    Returns (estimate, standard error); deterministic for a fixed seed.
    """
    if threshold < 0:
        raise ParameterError("threshold must be non-negative")
    if threshold == 0:
        return 1.0, 0.0
    if threshold >= 2 * r_s:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    a = _disk_points(rng, r_s, samples)
    b = _disk_points(rng, r_s, samples)
    hits = np.einsum("ij,ij->i", a - b, a - b) > threshold * threshold
    p = float(np.mean(hits))
    return p, math.sqrt(max(p * (1 - p), 0.0) / samples)


def disk_triple_prob(
    r_s: float, threshold: float, samples: int = 1_000_000, seed: int = 0
) -> tuple[float, float]:
    """Monte-Carlo P(three uniform points in a disk are pairwise farther
    than threshold); degenerate geometry (threshold >= disk diameter)
    returns exactly zero."""
    if threshold < 0:
        raise ParameterError("threshold must be non-negative")
    if threshold == 0:
        return 1.0, 0.0
    if threshold >= 2 * r_s:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    a = _disk_points(rng, r_s, samples)
    b = _disk_points(rng, r_s, samples)
    c = _disk_points(rng, r_s, samples)
    t2 = threshold * threshold
    hits = (
        (np.einsum("ij,ij->i", a - b, a - b) > t2)
        & (np.einsum("ij,ij->i", a - c, a - c) > t2)
        & (np.einsum("ij,ij->i", b - c, b - c) > t2)
    )
    p = float(np.mean(hits))
    return p, math.sqrt(max(p * (1 - p), 0.0) / samples)
