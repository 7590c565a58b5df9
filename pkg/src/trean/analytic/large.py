"""Approximate saturation throughput for networks larger than one sensing
range.

On top of the backoff chain, transmissions now fail from hidden stations:
during each broadcast stage (cooperate-request, authorization, data, ack)
the transmitter is invisible to part of the receiver's interference disk.
The failure coupling becomes

    p_f = 1 - (1 - p_t)^(n_i + n_1 - 1)
    p_c = p_t (1 - p_t)^(n_i - 2 + n_1)

with n_1 counting hidden-region stations weighted by how many generalized
slots each stage's vulnerable period spans.  Since those weights use
ceil(T_v / X) and X itself depends on the solution, the solver alternates
between the scalar p_t fixed point and the X update until both settle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import ConvergenceFailure
from ..timing import DEFAULT_TIMING, MODE_BASIC, TimingConfig
from .geometry import disk_pair_prob, disk_triple_prob, hidden_region_count
from .markov import FixedPointSolution, MarkovParams, small_scale_fixed_point

STAGE_RTC = "rtc"
STAGE_CTS = "cts"
STAGE_BDATA = "bdata"
STAGE_BACK = "back"


def vulnerable_periods(timing: TimingConfig, mode: str = MODE_BASIC) -> dict[str, int]:
    """Per-broadcast-stage vulnerable periods, us.

    The cooperate-request is the first broadcast after the initial request
    from a different station, so hidden stations are unconstrained for its
    whole airtime; the later stages each follow a transmission from the end
    whose hidden region matters, which shortens the window by DIFS - SIFS.
    """
    reduce = timing.difs - timing.sifs
    return {
        STAGE_RTC: timing.t_rtc(mode),
        STAGE_CTS: max(timing.t_cts(mode) - reduce, 0),
        STAGE_BDATA: max(timing.t_bdata - reduce, 0),
        STAGE_BACK: max(timing.t_back - reduce, 0),
    }


@dataclass(frozen=True)
class LargeScaleParams:
    n_stations: int = 300
    density: float = 3.0
    r_c: float = 1.0
    r_i: float = 1.78
    r_s: float = 2.2
    w0: int = 16
    m: int = 6
    timing: TimingConfig = DEFAULT_TIMING
    mode: str = MODE_BASIC
    mc_samples: int = 1_000_000
    mc_seed: int = 0

    @property
    def n_i(self) -> float:
        return self.r_i**2 * math.pi * self.density

    @property
    def n_s(self) -> float:
        return self.r_s**2 * math.pi * self.density

    @property
    def n_h(self) -> float:
        return hidden_region_count(self.density, self.r_c, self.r_i, self.r_s)

    def separation_probs(self) -> tuple[float, float]:
        """(p_2c, p_3c): chance that 2 (3) random points in the sensing disk
        are pairwise farther than r_i + r_c apart, so their request frames
        can succeed concurrently."""
        thr = self.r_i + self.r_c
        p2, _ = disk_pair_prob(self.r_s, thr, self.mc_samples, self.mc_seed)
        p3, _ = disk_triple_prob(self.r_s, thr, self.mc_samples, self.mc_seed + 1)
        return p2, p3


def _hidden_slot_weights(t_v: dict[str, int], slot_x: float) -> dict[str, int]:
    return {k: math.ceil(v / slot_x) if v > 0 else 0 for k, v in t_v.items()}


def _n1(n_h: float, w: dict[str, int]) -> float:
    return 2 * n_h * (w[STAGE_RTC] + w[STAGE_CTS] + w[STAGE_BDATA]) + n_h * w[STAGE_BACK]


def _n2(n_h: float, w: dict[str, int]) -> float:
    return 2 * n_h * (w[STAGE_RTC] + w[STAGE_CTS]) + n_h * w[STAGE_BDATA]


def large_scale_fixed_point(
    params: LargeScaleParams,
    tol: float = 1e-6,
    max_outer: int = 300,
) -> FixedPointSolution:
    """Alternating solve of the joint (p_t, X) fixed point.

    Given X, the hidden-station counts n_1/n_2 are fixed and the scalar p_t
    fixed point is solved with the large-area coupling; X is then recomputed
    from the idle/collision/success decomposition around one station.  The
    ceil() weights make X piecewise constant, so a two-cycle oscillation is
    resolved by averaging the two iterates (flagged in ``extras``).
    """
    t = params.timing
    t_v = vulnerable_periods(t, params.mode)
    n_i, n_s, n_h = params.n_i, params.n_s, params.n_h
    p2c, p3c = params.separation_probs()
    t_short = t.t_rts + t.sifs + t.t_rtc(params.mode) + t.difs
    t_long = t.t_success(params.mode)
    t_rtssucc = 0.5 * (t_short + t_long)

    mk = MarkovParams(
        max(int(round(n_i)), 2), params.w0, params.m, t, params.mode
    )

    def solve_pt(n_1: float) -> FixedPointSolution:
        def couple(p_t: float) -> tuple[float, float]:
            p_f = 1.0 - (1.0 - p_t) ** (n_i + n_1 - 1.0)
            p_c = p_t * (1.0 - p_t) ** (n_i - 2.0 + n_1)
            return p_f, p_c

        return small_scale_fixed_point(mk, tol=1e-12, coupling=couple)

    def x_of(p_t: float) -> tuple[float, float, float, float]:
        p_idle = (1.0 - p_t) ** n_s
        single = p_t * (1.0 - p_t) ** (n_i - 1.0)
        p_succ = (
            n_s * single
            - 0.5 * n_s * (n_s - 1.0) * p2c * single**2
            + n_s * (n_s - 1.0) * (n_s - 2.0) / 6.0 * p3c * single**3
        )
        p_succ = min(max(p_succ, 0.0), 1.0 - p_idle)
        p_col = 1.0 - p_idle - p_succ
        x = p_idle * t.slot + p_col * t.t_collision + p_succ * t_rtssucc
        return x, p_idle, p_succ, p_col

    x = float(t.t_collision)
    history: list[float] = []
    flagged = False
    sol = None
    for outer in range(max_outer):
        weights = _hidden_slot_weights(t_v, x)
        n_1 = _n1(n_h, weights)
        sol = solve_pt(n_1)
        x_new, p_idle, p_succ, p_col = x_of(sol.p_t)
        history.append(x_new)
        if abs(x_new - x) < tol * max(x, 1.0):
            x = x_new
            break
        if len(history) >= 3 and abs(history[-1] - history[-3]) < tol * max(x, 1.0):
            # period-2 cycle across a ceil() boundary: settle on the average
            x = 0.5 * (history[-1] + history[-2])
            flagged = True
            weights = _hidden_slot_weights(t_v, x)
            n_1 = _n1(n_h, weights)
            sol = solve_pt(n_1)
            x_new, p_idle, p_succ, p_col = x_of(sol.p_t)
            break
        x = x_new
    else:
        raise ConvergenceFailure("slot-length iteration did not converge", history)

    weights = _hidden_slot_weights(t_v, x)
    sol.p_idle, sol.p_succ, sol.p_col = p_idle, p_succ, p_col
    sol.slot_time = x
    sol.extras = {
        "n_i": n_i,
        "n_s": n_s,
        "n_h": n_h,
        "n_1": _n1(n_h, weights),
        "n_2": _n2(n_h, weights),
        "p_2c": p2c,
        "p_3c": p3c,
        "slot_weights": weights,
        "oscillation_averaged": flagged,
        "outer_iterations": outer + 1,
    }
    return sol


def large_scale_throughput(sol: FixedPointSolution, params: LargeScaleParams) -> float:
    """Network throughput (Mb/s) from the converged large-area solution.

    ``p_s2`` is the chance both data frames of a cooperation reach their
    destinations and ``p_s1`` that exactly one does; a delivered frame
    counts its payload twice (two radio hops).
    """
    t_v = vulnerable_periods(params.timing, params.mode)
    w = _hidden_slot_weights(t_v, sol.slot_time)
    n_h = params.n_h
    n_2 = _n2(n_h, w)
    p_t = sol.p_t
    base = (1.0 - p_t) ** (params.n_i - 1.0 + n_2)
    hidden_data = (1.0 - p_t) ** (n_h * w[STAGE_BDATA])
    p_s2 = base * hidden_data
    p_s1 = base * (2.0 - 2.0 * hidden_data)
    phi = (
        params.n_stations
        * p_t
        * (4.0 * p_s2 + 2.0 * p_s1)
        * params.timing.payload_bits
        / sol.slot_time
    )
    sol.extras.update({"p_s1": p_s1, "p_s2": p_s2, "n_2": n_2})
    sol.throughput = phi
    return phi


def solve_large_scale(params: LargeScaleParams, tol: float = 1e-6) -> FixedPointSolution:
    sol = large_scale_fixed_point(params, tol)
    large_scale_throughput(sol, params)
    return sol
