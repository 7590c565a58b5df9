from .markov import (
    FixedPointSolution,
    MarkovParams,
    bianchi_fixed_point,
    c_value,
    small_scale_fixed_point,
    small_scale_throughput,
    solve_csma,
    solve_small_scale,
    stationary_distribution,
    transmit_probability,
)
from .geometry import (
    circle_intersection_area,
    disk_pair_prob,
    disk_triple_prob,
    hidden_region_area,
    hidden_region_count,
)
from .large import (
    LargeScaleParams,
    large_scale_fixed_point,
    large_scale_throughput,
    solve_large_scale,
    vulnerable_periods,
)

__all__ = [
    "FixedPointSolution",
    "MarkovParams",
    "bianchi_fixed_point",
    "c_value",
    "small_scale_fixed_point",
    "small_scale_throughput",
    "solve_csma",
    "solve_small_scale",
    "stationary_distribution",
    "transmit_probability",
    "circle_intersection_area",
    "disk_pair_prob",
    "disk_triple_prob",
    "hidden_region_area",
    "hidden_region_count",
    "LargeScaleParams",
    "large_scale_fixed_point",
    "large_scale_throughput",
    "solve_large_scale",
    "vulnerable_periods",
]
