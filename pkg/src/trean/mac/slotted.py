"""Generalized-slot simulator for fully-sensed (single-cell) networks.

When every station senses every other, the channel alternates between idle
slots, whole collision periods, and whole cooperation periods, and every
backoff counter decrements exactly once per such generalized slot.  The
simulator advances slot by slot (bulk-skipping idle runs), which reproduces
the backoff chain's dynamics exactly and keeps runs cheap enough for long
statistics.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..timing import DEFAULT_TIMING, MODE_BASIC, TREAN_MODES, TimingConfig
from .metrics import Metrics
from .topology import Topology

CSMA = "csma"
PROTOCOLS = TREAN_MODES + (CSMA,)


@dataclass
class SlottedConfig:
    n: int
    protocol: str = MODE_BASIC
    atc_prob: float = 1.0
    n_ea: int = 2
    duration_us: int = 1_000_000
    seed: int = 0
    timing: TimingConfig = DEFAULT_TIMING
    topology: Topology | None = None          # optional, for close-neighbor draws
    fixed_routes: dict = field(default_factory=dict)   # src -> (relay, target)
    contenders: tuple = ()                    # default: every station

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if not 0.0 <= self.atc_prob <= 1.0:
            raise ConfigError("atc_prob must be in [0, 1]")
        if self.n_ea > self.timing.max_n_ea():
            raise ConfigError(
                f"n_ea={self.n_ea} exceeds (DIFS-SIFS)/slot="
                f"{self.timing.max_n_ea()}"
            )
        if self.n < 2:
            raise ConfigError("need at least two stations")


def run_slotted(cfg: SlottedConfig) -> Metrics:
    rng = random.Random(cfg.seed)
    t = cfg.timing
    n = cfg.n
    contenders = list(cfg.contenders) if cfg.contenders else list(range(n))
    w0, m_max = 16, 6
    windows = [min(2**i, 2**m_max) * w0 for i in range(m_max + 1)]

    idx_of = {s: k for k, s in enumerate(contenders)}
    nc = len(contenders)
    stage = np.zeros(nc, dtype=np.int64)
    counter = np.array([rng.randrange(w0) for _ in range(nc)], dtype=np.int64)

    payload = t.payload_bits
    met = Metrics(n_stations=n, per_station_bits=[0.0] * n, seed=cfg.seed)
    is_csma = cfg.protocol == CSMA
    now = 0

    def redraw(k: int, new_stage: int):
        stage[k] = new_stage
        counter[k] = rng.randrange(windows[new_stage])

    def pick_route(a: int) -> tuple[int, int]:
        if a in cfg.fixed_routes:
            return cfg.fixed_routes[a]
        if cfg.topology is not None and cfg.topology.two_hop_pairs[a]:
            return rng.choice(cfg.topology.two_hop_pairs[a])
        b = rng.choice([s for s in range(n) if s != a])
        c = rng.choice([s for s in range(n) if s not in (a, b)])
        return b, c

    def qualified_stations(a: int, b: int, c: int) -> list[int]:
        if cfg.protocol == MODE_BASIC:
            return [c]
        pool: list[int] = []
        if cfg.topology is not None:
            pool = [
                int(s) for s in cfg.topology.close_idx[c] if s not in (a, b, c)
            ]
        else:
            pool = [s for s in range(n) if s not in (a, b, c)]
        extras = rng.sample(pool, min(cfg.n_ea, len(pool)))
        return [c] + extras

    def eligibility(a: int, station: int) -> float:
        if cfg.protocol != TREAN_MODES[2]:
            return cfg.atc_prob
        # extended plus: a backward frame toward the initiator or any of its
        # close neighbors qualifies
        n_close = (
            len(cfg.topology.close_idx[a]) if cfg.topology is not None else cfg.n_ea
        )
        return 1.0 - (1.0 - cfg.atc_prob) ** (1 + n_close)

    while now < cfg.duration_us:
        pending = int(counter.min())
        if pending > 0:
            # bulk-skip the idle run
            slots = min(pending, 1 + (cfg.duration_us - now) // t.slot)
            counter -= slots
            now += slots * t.slot
            met.idle_us += slots * t.slot
            continue
        tx = np.flatnonzero(counter == 0)
        met.attempts += len(tx)
        others = np.ones(nc, dtype=bool)
        others[tx] = False
        if len(tx) > 1:
            dur = t.t_collision_csma if is_csma else t.t_collision
            met.collision_us += dur
            met.add_collision("rts")
            for k in tx:
                redraw(int(k), min(int(stage[k]) + 1, m_max))
            counter[others] -= 1
            now += dur
            continue

        k = int(tx[0])
        a = contenders[k]
        if is_csma:
            dur = t.t_success_csma
            met.success_us += dur
            met.csma_success += 1
            met.per_station_bits[a] += payload
            met.delivered_bits += payload
            met.data_delivered += 1
            redraw(k, 0)
            counter[others] -= 1
            now += dur
            continue

        b, c = pick_route(a)
        qualified = qualified_stations(a, b, c)
        seq = list(range(len(qualified)))
        rng.shuffle(seq)
        responder, resp_seq = None, None
        for station, s_no in sorted(zip(qualified, seq), key=lambda p: p[1]):
            if rng.random() < eligibility(a, station):
                responder, resp_seq = station, s_no
                break
        met.cpp_sent += 1
        if responder is not None:
            met.atc_sent += 1
            dur = t.t_success(cfg.protocol, resp_seq)
            met.coop_two_way += 1
            met.per_station_bits[a] += 2 * payload
            met.per_station_bits[responder] += 2 * payload
            met.delivered_bits += 4 * payload
            met.data_delivered += 2
            redraw(k, 0)
            rk = idx_of.get(responder)
            if rk is not None:
                others[rk] = False
                redraw(rk, 0)
        else:
            dur = t.t_one_way(cfg.protocol)
            met.coop_one_way += 1
            met.per_station_bits[a] += 2 * payload
            met.delivered_bits += 2 * payload
            met.data_delivered += 1
            redraw(k, 0)
        met.success_us += dur
        counter[others] -= 1
        now += dur

    met.duration_us = now
    return met
