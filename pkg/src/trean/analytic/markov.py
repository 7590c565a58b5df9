"""Backoff Markov model and saturation throughput for fully-sensed networks.

Every station sits in a state (stage i, counter j) with W_i = min(2^i, 2^m)
* W_0.  Three probabilities couple the chain to the network: p_t (a station
transmits in a generalized slot), p_f (its handshake collides), and p_c (a
backoff station is pulled into a successful cooperation and resets).  The
stationary transmit probability solves

    p_t = c(p_f, p_c) * p_c / (1 - c(p_f, p_c) * (1 - p_c - p_f))

with the stage-sum c() below, closed against p_c = p_t (1 - p_t)^(n-2) and
p_f = 1 - (1 - p_t)^(n-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import ConvergenceFailure, DomainError, NoSolution
from ..timing import DEFAULT_TIMING, MODE_BASIC, TimingConfig

P_C_CLAMP = 1e-13


@dataclass(frozen=True)
class MarkovParams:
    n: int
    w0: int = 16
    m: int = 6
    timing: TimingConfig = DEFAULT_TIMING
    mode: str = MODE_BASIC

    def windows(self) -> list[int]:
        return [min(2**i, 2**self.m) * self.w0 for i in range(self.m + 1)]

    @property
    def t_success(self) -> int:
        return self.timing.t_success(self.mode)

    @property
    def t_collision(self) -> int:
        return self.timing.t_collision

    @property
    def payload_bits(self) -> int:
        return self.timing.payload_bits


@dataclass
class FixedPointSolution:
    p_t: float
    p_f: float
    p_c: float
    residual: float
    iterations: int
    p_idle: float = 0.0
    p_succ: float = 0.0
    p_col: float = 0.0
    slot_time: float = 0.0          # generalized slot length X, us
    throughput: float = 0.0         # bits per us == Mb/s
    extras: dict = field(default_factory=dict)


def _one_minus_pow(p: float, w: int) -> float:
    """1 - (1 - p)^w, stable for tiny p."""
    return -math.expm1(w * math.log1p(-p))


def c_value(p_f: float, p_c: float, w0: int, m: int) -> float:
    """Stage sum c(p_f, p_c) of the backoff chain's transmit-state weights."""
    if not 0 < p_c <= 1:
        raise DomainError(f"p_c must be in (0, 1], got {p_c}")
    if not 0 <= p_f <= 1:
        raise DomainError(f"p_f must be in [0, 1], got {p_f}")
    windows = [min(2**i, 2**m) * w0 for i in range(m + 1)]
    total = 0.0
    prod = 1.0
    for i, w in enumerate(windows):
        prod *= _one_minus_pow(p_c, w) / w
        if i == m:
            wm = windows[m]
            delta = (p_c * wm - p_f * _one_minus_pow(p_c, wm)) / (p_c * wm)
        else:
            delta = 1.0
        total += (p_f**i) / (p_c ** (i + 1) * delta) * prod
    return total


def transmit_probability(p_f: float, p_c: float, w0: int, m: int) -> float:
    """p_t implied by a given (p_f, p_c) pair."""
    c = c_value(p_f, p_c, w0, m)
    denom = 1.0 - c * (1.0 - p_c - p_f)
    return c * p_c / denom


def _coupling(p_t: float, n: int) -> tuple[float, float]:
    p_c = p_t * (1.0 - p_t) ** (n - 2)
    p_f = _one_minus_pow(p_t, n - 1)
    return p_f, p_c


def small_scale_fixed_point(
    params: MarkovParams,
    tol: float = 1e-10,
    max_iter: int = 500,
    coupling=None,
) -> FixedPointSolution:
    """Solve the scalar fixed point for p_t.

    ``coupling`` maps p_t to (p_f, p_c) and defaults to the fully-sensed
    network forms; the large-area model reuses this solver with its own
    coupling.  Damped iteration is tried first, with a bisection fallback on
    the residual g(p_t) = p_t - rhs(p_t), which brackets a root on (0, 1).
    """
    if params.n < 2:
        raise NoSolution("need at least two stations")
    couple = coupling or (lambda p_t: _coupling(p_t, params.n))

    def rhs(p_t: float) -> float:
        p_f, p_c = couple(p_t)
        return transmit_probability(p_f, max(p_c, P_C_CLAMP), params.w0, params.m)

    trace = []
    p = 0.1
    for it in range(max_iter):
        r = rhs(p)
        trace.append((p, r))
        nxt = 0.5 * p + 0.5 * r
        if abs(nxt - p) < tol and abs(r - p) < tol:
            p = nxt
            break
        p = min(max(nxt, 1e-9), 1 - 1e-9)
    else:
        # damped iteration cycled; bisect g(p) = p - rhs(p)
        lo, hi = 1e-9, 1.0 - 1e-9
        g_lo, g_hi = lo - rhs(lo), hi - rhs(hi)
        if g_lo * g_hi > 0:
            raise NoSolution(
                f"residual has no sign change on ({lo}, {hi}): {g_lo}, {g_hi}"
            )
        for it2 in range(200):
            mid = 0.5 * (lo + hi)
            g_mid = mid - rhs(mid)
            trace.append((mid, g_mid))
            if g_lo * g_mid <= 0:
                hi = mid
            else:
                lo, g_lo = mid, g_mid
            if hi - lo < tol:
                break
        else:
            raise ConvergenceFailure("bisection did not converge", trace)
        p = 0.5 * (lo + hi)

    residual = abs(p - rhs(p))
    if not residual < max(tol * 100, 1e-8):
        raise ConvergenceFailure(f"fixed point residual {residual}", trace)
    p_f, p_c = couple(p)
    return FixedPointSolution(p, p_f, p_c, residual, len(trace))


def small_scale_throughput(
    solution: FixedPointSolution, params: MarkovParams
) -> tuple[float, float]:
    """Generalized slot length X (us) and saturation throughput (Mb/s).

    A successful cooperation delivers two packets over two hops each, hence
    the factor four on the payload.
    """
    n, p_t = params.n, solution.p_t
    p_idle = (1.0 - p_t) ** n
    p_succ = n * p_t * (1.0 - p_t) ** (n - 1)
    p_col = 1.0 - p_idle - p_succ
    slot = (
        p_idle * params.timing.slot
        + p_col * params.t_collision
        + p_succ * params.t_success
    )
    phi = 4.0 * p_succ * params.payload_bits / slot
    solution.p_idle, solution.p_succ, solution.p_col = p_idle, p_succ, p_col
    solution.slot_time, solution.throughput = slot, phi
    return slot, phi


def solve_small_scale(params: MarkovParams, tol: float = 1e-10) -> FixedPointSolution:
    sol = small_scale_fixed_point(params, tol)
    small_scale_throughput(sol, params)
    return sol


# --- CSMA/CA reference model -------------------------------------------------

def bianchi_fixed_point(n: int, w0: int = 16, m: int = 6, tol: float = 1e-12) -> tuple[float, float]:
    """Classic saturation fixed point (p_t, p_f) for plain CSMA/CA.

    This is the p_c -> 0 limit of the cooperative chain; the closed form
    tau(p) = 2(1-2p) / ((1-2p)(W+1) + pW(1-(2p)^m)) is solved against
    p = 1-(1-tau)^(n-1) by bisection.
    """

    def tau_of(p: float) -> float:
        if abs(1 - 2 * p) < 1e-12:
            return 2.0 / ((w0 + 1) + p * w0 * m)
        num = 2.0 * (1 - 2 * p)
        den = (1 - 2 * p) * (w0 + 1) + p * w0 * (1 - (2 * p) ** m)
        return num / den

    def g(tau: float) -> float:
        p = _one_minus_pow(tau, n - 1)
        return tau - tau_of(p)

    lo, hi = 1e-9, 1 - 1e-9
    if g(lo) * g(hi) > 0:
        raise NoSolution("no bracket for the CSMA fixed point")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(lo) * g(mid) <= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    tau = 0.5 * (lo + hi)
    return tau, _one_minus_pow(tau, n - 1)


def solve_csma(params: MarkovParams, tol: float = 1e-12) -> FixedPointSolution:
    """Saturation throughput of the CSMA/CA baseline (single-hop counting)."""
    p_t, p_f = bianchi_fixed_point(params.n, params.w0, params.m, tol)
    sol = FixedPointSolution(p_t, p_f, 0.0, 0.0, 0)
    n, t = params.n, params.timing
    p_idle = (1.0 - p_t) ** n
    p_succ = n * p_t * (1.0 - p_t) ** (n - 1)
    p_col = 1.0 - p_idle - p_succ
    slot = p_idle * t.slot + p_col * t.t_collision_csma + p_succ * t.t_success_csma
    sol.p_idle, sol.p_succ, sol.p_col = p_idle, p_succ, p_col
    sol.slot_time = slot
    sol.throughput = p_succ * t.payload_bits / slot
    return sol


# --- stationary distribution reconstruction ----------------------------------

def stationary_distribution(
    p_t: float, p_f: float, p_c: float, w0: int, m: int
) -> list[list[float]]:
    """Rebuild the per-state probabilities v[i][j] from a converged solution.

    Uses v_{i,j} = (a_i / p_c) * (1 - (1-p_c)^(W_i - j)) with the stage
    inflows a_i; the stage-0 inflow uses the normalization identity
    (cooperation resets arrive at rate p_c * (1 - v_t)).
    """
    windows = [min(2**i, 2**m) * w0 for i in range(m + 1)]
    v_t = p_t
    # transmit-state weights via the c() stage terms
    c_total = c_value(p_f, max(p_c, P_C_CLAMP), w0, m)
    v_i0 = []
    prod = 1.0
    for i, w in enumerate(windows):
        prod *= _one_minus_pow(p_c, w) / w
        if i == m:
            wm = windows[m]
            delta = (p_c * wm - p_f * _one_minus_pow(p_c, wm)) / (p_c * wm)
        else:
            delta = 1.0
        term = (p_f**i) / (p_c ** (i + 1) * delta) * prod
        v_i0.append(v_t * term / c_total)

    out = []
    for i, w in enumerate(windows):
        if i == 0:
            a_i = (p_c * (1.0 - v_t) + v_t * (1.0 - p_f)) / w
        elif i < m:
            a_i = v_i0[i - 1] * p_f / w
        else:
            a_i = (v_i0[m - 1] + v_i0[m]) * p_f / w
        row = [(a_i / p_c) * _one_minus_pow(p_c, w - j) for j in range(w)]
        out.append(row)
    return out
