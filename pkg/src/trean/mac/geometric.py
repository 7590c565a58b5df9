"""Event-driven simulator over a geometric topology.

Carrier sense, interference, and hidden stations all follow the range sets
of the topology: a station freezes its countdown while any transmitter
within its sensing radius is active (or its NAV runs), a reception fails if
any other transmission from inside the receiver's interference radius
overlaps it, and decoding requires the transmitter inside communication
range.  Known-packet cancellation is abstracted: a superposition is
decodable when every unwanted component is either known to the receiver
(its own frame, a buffered protection packet, or an overheard close
neighbor's frame) or absent.

Backoff follows the generalized-slot convention of the fully-sensed
simulator: a frozen counter loses one unit when its local busy period ends,
then one per idle slot after DIFS; a station whose counter reaches zero
transmits at that boundary.
"""

from __future__ import annotations

import heapq
import itertools
import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..timing import (
    DEFAULT_TIMING,
    MODE_BASIC,
    MODE_EXTENDED,
    MODE_EXTENDED_PLUS,
    TREAN_MODES,
    TimingConfig,
)
from . import frames as fr
from .metrics import Metrics
from .topology import Topology

CSMA = "csma"

# event priorities at equal timestamps: frame ends settle the channel before
# new frames start, timers run next, and backoff firings go last so that a
# same-instant transmission is sensed
P_END, P_START, P_TIMER, P_FIRE = 0, 1, 2, 3

CONTEND, ENGAGED = 0, 1


COLLISION_FULL = "full"
COLLISION_ANALYTIC = "analytic"


@dataclass
class GeoConfig:
    topology: Topology
    protocol: str = MODE_BASIC
    atc_prob: float = 1.0
    n_ea: int = 2
    cpp_enabled: bool = True
    duration_us: int = 200_000
    warmup_us: int = 0
    seed: int = 0
    timing: TimingConfig = DEFAULT_TIMING
    fixed_routes: dict = field(default_factory=dict)
    contenders: tuple = ()
    # "full": any overlapping transmission from inside the receiver's
    #   interference radius destroys a reception.
    # "analytic": the world the throughput model describes.  Stations that
    #   can sense a frame's transmitter never collide with it mid-flight
    #   (the model assumes carrier sense removes them entirely); only
    #   same-slot starts and transmissions from truly hidden stations do.
    #   Used for model-vs-simulation validation runs.
    collision_mode: str = COLLISION_FULL

    def __post_init__(self):
        if self.protocol not in TREAN_MODES + (CSMA,):
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if not 0.0 <= self.atc_prob <= 1.0:
            raise ConfigError("atc_prob must be in [0, 1]")
        if self.n_ea > self.timing.max_n_ea():
            raise ConfigError("n_ea exceeds the DIFS/SIFS slot budget")
        if self.collision_mode not in (COLLISION_FULL, COLLISION_ANALYTIC):
            raise ConfigError(f"unknown collision mode {self.collision_mode!r}")


@dataclass
class Cooperation:
    ident: int
    initiator: int
    relay: int
    target: int
    phase: str = "rts"
    qualified: tuple = ()
    seq_of: dict = field(default_factory=dict)
    responder: int | None = None
    resp_dst: int | None = None            # responder's frame destination
    one_way: bool = False
    rtc_end: int = 0
    ma_txs: dict = field(default_factory=dict)       # sender -> (start, end)
    back_txs: dict = field(default_factory=dict)
    data_ids: dict = field(default_factory=dict)     # sender -> (peer, seq)
    ack_pending: list = field(default_factory=list)  # [src, peer, seq, acked]
    overheard: dict = field(default_factory=dict)    # listener -> known sender
    back_overheard: dict = field(default_factory=dict)
    expected_back: dict = field(default_factory=dict)  # acker -> ackee
    done: set = field(default_factory=set)
    data_delivered_flags: dict = field(default_factory=dict)
    acks_settled: bool = False
    dead: bool = False


class Engine:
    """One simulation run; see ``run_geometric``."""

    def __init__(self, cfg: GeoConfig):
        self.cfg = cfg
        self.topo = cfg.topology
        self.t = cfg.timing
        self.rng = random.Random(cfg.seed)
        n = self.topo.n
        self.n = n
        self.is_csma = cfg.protocol == CSMA
        self.contenders = set(cfg.contenders or range(n))

        self.w0, self.m_max = 16, 6
        self.windows = [min(2**i, 2**self.m_max) * self.w0 for i in range(self.m_max + 1)]
        self.stage = [0] * n
        self.counter = [self.rng.randrange(self.w0) for _ in range(n)]
        self.state = [CONTEND] * n
        self.busy = [0] * n
        self.nav = [0] * n
        self.anchor = [0] * n
        self.fire_seq = [0] * n
        self.timer_seq = [0] * n
        # generalized-slot bookkeeping: each sensed contention event (an
        # initial request frame) consumes one backoff slot, so overlapping
        # cooperations from different areas count separately even when the
        # local busy periods merge; this is the slot process the fully-
        # sensed simulator and the throughput model both use
        self.pending_events = [0] * n
        self.last_event_t = [-(10**9)] * n
        self.ctx_of: list[Cooperation | None] = [None] * n

        self.heap: list = []
        self.eseq = itertools.count()
        self.now = 0
        self.tx_hist: list[deque] = [deque(maxlen=6) for _ in range(n)]
        self.coop_ids = itertools.count(1)

        # multi-id acknowledgement ledger
        self.pair_seq: dict = {}          # (src, dst) -> last assigned seq
        self.unacked: dict = {}           # (src, dst) -> list of [seq, delivered]
        self.recent_rx: dict = {}         # (dst, src) -> deque of last 3 seqs

        self.met = Metrics(n_stations=n, per_station_bits=[0.0] * n, seed=cfg.seed)
        self._warm_snapshot = None

        self.sense_idx = [list(map(int, v)) for v in self.topo.sense_idx]
        self.comm_idx = [list(map(int, v)) for v in self.topo.comm_idx]
        self.intf_idx = [list(map(int, np.flatnonzero(r))) for r in self.topo.intf]
        self.comm = self.topo.comm
        self.close = self.topo.close
        self.sense = self.topo.sense

    # ------------------------------------------------------------- event loop
    def push(self, time: int, prio: int, kind: str, data) -> None:
        heapq.heappush(self.heap, (time, prio, next(self.eseq), kind, data))

    def run(self) -> Metrics:
        for i in sorted(self.contenders):
            self.schedule_fire(i)
        end_at = self.cfg.duration_us + self.cfg.warmup_us
        while self.heap:
            time, prio, _, kind, data = heapq.heappop(self.heap)
            if time > end_at:
                break
            self.now = time
            if self._warm_snapshot is None and time >= self.cfg.warmup_us:
                self._warm_snapshot = self._snapshot()
            if kind == "end":
                self.on_tx_end(data)
            elif kind == "timer":
                name, station, seq, payload = data
                if self.timer_seq[station] == seq:
                    self.on_timer(name, station, payload)
            elif kind == "fire":
                # same-instant firings cannot carrier-sense each other:
                # validate the whole batch before any transmission starts
                batch = [data]
                while self.heap and self.heap[0][0] == time and self.heap[0][1] == P_FIRE:
                    batch.append(heapq.heappop(self.heap)[4])
                ready = [
                    st
                    for st, seq in batch
                    if self.fire_seq[st] == seq
                    and self.state[st] == CONTEND
                    and self.busy[st] == 0
                    and self.now >= self.nav[st]
                ]
                for st in ready:
                    self.met.attempts += 1
                    if self.is_csma:
                        self.start_csma(st)
                    else:
                        self.start_cooperation(st)
        self._finalize()
        return self.met

    _COUNTER_KEYS = (
        "delivered_bits",
        "coop_two_way",
        "coop_one_way",
        "csma_success",
        "attempts",
        "data_delivered",
        "immediate_ack_lost",
        "final_unacked",
        "atc_sent",
        "atc_suppressed",
        "cpp_sent",
    )

    def _snapshot(self) -> dict:
        snap = {k: getattr(self.met, k) for k in self._COUNTER_KEYS}
        snap["per_station_bits"] = list(self.met.per_station_bits)
        snap["collisions"] = dict(self.met.collisions)
        return snap

    def _finalize(self) -> None:
        m = self.met
        snap = self._warm_snapshot or self._snapshot()
        for k in self._COUNTER_KEYS:
            setattr(m, k, getattr(m, k) - snap[k])
        m.per_station_bits = [
            a - b for a, b in zip(m.per_station_bits, snap["per_station_bits"])
        ]
        m.collisions = {
            k: v - snap["collisions"].get(k, 0) for k, v in m.collisions.items()
        }
        m.duration_us = self.cfg.duration_us

    # ---------------------------------------------------------- backoff layer
    def fire_time(self, station: int) -> int:
        return (
            self.anchor[station]
            + self.t.difs
            + max(self.counter[station] - 1, 0) * self.t.slot
        )

    def schedule_fire(self, station: int) -> None:
        if (
            station not in self.contenders
            or self.state[station] != CONTEND
            or self.busy[station] > 0
        ):
            return
        self.anchor[station] = max(self.anchor[station], self.nav[station], self.now)
        self.fire_seq[station] += 1
        self.push(
            max(self.fire_time(station), self.now),
            P_FIRE,
            "fire",
            (station, self.fire_seq[station]),
        )

    def _consume_slots(self, station: int) -> None:
        d = self.now - self.anchor[station] - self.t.difs
        if d > 0:
            used = (d + self.t.slot - 1) // self.t.slot
            self.counter[station] = max(self.counter[station] - used, 0)

    def freeze(self, station: int) -> None:
        if self.state[station] == CONTEND:
            self._consume_slots(station)
            self.fire_seq[station] += 1

    def unfreeze(self, station: int) -> None:
        # one generalized-slot decrement per sensed contention event; the
        # last one is charged at the first boundary, anchor + DIFS, via the
        # -1 in fire_time
        if self.state[station] == CONTEND:
            extra = max(self.pending_events[station] - 1, 0)
            if extra:
                self.counter[station] = max(self.counter[station] - extra, 0)
            self.pending_events[station] = 0
            self.anchor[station] = max(self.now, self.nav[station])
            self.schedule_fire(station)

    def redraw(self, station: int, new_stage: int) -> None:
        self.stage[station] = new_stage
        self.counter[station] = self.rng.randrange(self.windows[new_stage])

    def release(self, station: int, outcome: str | None = None) -> None:
        """Return a station to contention, resolving its backoff."""
        if outcome == "success":
            self.redraw(station, 0)
        elif outcome == "failure":
            self.redraw(station, min(self.stage[station] + 1, self.m_max))
        if outcome is not None:
            # a fresh draw must not be charged the ending busy period's
            # slot decrement; offset the -1 built into fire_time
            self.counter[station] += 1
        self.state[station] = CONTEND
        self.ctx_of[station] = None
        self.pending_events[station] = 0
        self.anchor[station] = max(self.now, self.nav[station])
        if self.busy[station] == 0:
            self.schedule_fire(station)

    def engage(self, station: int, ctx: Cooperation) -> None:
        if self.state[station] == CONTEND and self.busy[station] == 0:
            self._consume_slots(station)
        self.state[station] = ENGAGED
        self.fire_seq[station] += 1
        self.pending_events[station] = 0
        self.ctx_of[station] = ctx

    def set_timer(self, name: str, station: int, at: int, payload=None) -> None:
        self.timer_seq[station] += 1
        self.push(at, P_TIMER, "timer", (name, station, self.timer_seq[station], payload))

    def set_aux_timer(self, name: str, station: int, at: int, payload=None) -> None:
        """A timer that does not displace the station's primary timer."""
        self.push(at, P_TIMER, "timer", (name, station, self.timer_seq[station], payload))

    def cancel_timers(self, station: int) -> None:
        self.timer_seq[station] += 1

    # ---------------------------------------------------------- channel model
    def start_tx(self, frame: fr.Frame, duration: int) -> fr.Transmission:
        tx = fr.Transmission(frame, self.now, self.now + duration)
        self.tx_hist[frame.src].append((tx.start, tx.end))
        is_event = frame.kind == fr.RTS
        for j in self.sense_idx[frame.src]:
            self.busy[j] += 1
            if self.busy[j] == 1:
                self.freeze(j)
            if is_event and self.now - self.last_event_t[j] > 2 * self.t.slot:
                self.pending_events[j] += 1
                self.last_event_t[j] = self.now
        self.push(tx.end, P_END, "end", tx)
        return tx

    def on_tx_end(self, tx: fr.Transmission) -> None:
        for j in self.sense_idx[tx.frame.src]:
            self.busy[j] -= 1
            if self.busy[j] == 0:
                self.unfreeze(j)
        if self.is_csma:
            self.dispatch_csma(tx)
        else:
            self.dispatch(tx)

    def _overlapping(self, station: int, t0: int, t1: int) -> bool:
        for s, e in self.tx_hist[station]:
            if s < t1 and t0 < e:
                return True
        return False

    def _interferes(self, s: int, t0: int, t1: int, sources: tuple) -> bool:
        """Does station s's transmission history destroy a reception over
        [t0, t1) whose wanted components come from ``sources``?"""
        analytic = self.cfg.collision_mode == COLLISION_ANALYTIC
        for st, en in self.tx_hist[s]:
            if st < t1 and t0 < en:
                if analytic and abs(st - t0) > self.t.slot and any(
                    self.sense[s, x] for x in sources
                ):
                    # the model's world: a station that senses the ongoing
                    # transmitter only collides on a same-slot start
                    continue
                return True
        return False

    def can_decode(self, tx: fr.Transmission, receiver: int, ignore=()) -> bool:
        src = tx.frame.src
        if receiver == src or not self.comm[src, receiver]:
            return False
        if self._overlapping(receiver, tx.start, tx.end):
            return False  # half duplex
        for s in self.intf_idx[receiver]:
            if s == src or s == receiver or s in ignore:
                continue
            if self._interferes(s, tx.start, tx.end, (src,)):
                return False
        return True

    def window_clear(self, receiver: int, t0: int, t1: int, ignore=()) -> bool:
        sources = tuple(s for s in ignore if s != receiver) or (receiver,)
        for s in self.intf_idx[receiver]:
            if s == receiver or s in ignore:
                continue
            if self._interferes(s, t0, t1, sources):
                return False
        return True

    def overhear_ok(self, listener: int, sender: int, other: int | None, t0: int, t1: int) -> bool:
        """Close-neighbor capture: the listener catches ``sender``'s frame
        despite the concurrent far transmission from ``other``."""
        if not self.close[sender, listener]:
            return False
        if other is not None and self.comm[other, listener]:
            return False
        if self._overlapping(listener, t0, t1):
            return False
        ignore = (sender,) if other is None else (sender, other)
        return self.window_clear(listener, t0, t1, ignore=ignore)

    def apply_nav(self, station: int, until: int) -> None:
        if until > self.nav[station]:
            self.nav[station] = until

    # ----------------------------------------------------------- ack ledger
    def next_pair_seq(self, src: int, dst: int) -> int:
        q = self.pair_seq.get((src, dst), 0) + 1
        self.pair_seq[(src, dst)] = q
        return q

    def note_received(self, dst: int, src: int, seq: int) -> None:
        self.recent_rx.setdefault((dst, src), deque(maxlen=3)).append(seq)

    def ack_ids_for(self, acker: int, peer: int) -> tuple:
        return tuple(self.recent_rx.get((acker, peer), ()))

    def process_ack(self, station: int, peer: int, ids: tuple) -> None:
        """Resolve the station's outstanding frames toward ``peer``: listed
        ids are acknowledged, ids older than the newest listed one have
        fallen out of the three-id window and count as finally lost."""
        buf = self.unacked.get((station, peer))
        if not buf or not ids:
            return
        newest = max(ids)
        keep = []
        for seq, delivered in buf:
            if seq in ids:
                continue
            if seq < newest:
                if delivered:
                    self.met.final_unacked += 1
                continue
            keep.append([seq, delivered])
        self.unacked[(station, peer)] = keep


def run_geometric(cfg: GeoConfig) -> Metrics:
    eng = CoopEngine(cfg) if cfg.protocol != CSMA else CsmaEngine(cfg)
    return eng.run()


class CoopEngine(Engine):
    """Cooperative relaying protocol on the event engine."""

    def pick_route(self, a: int) -> tuple[int, int] | None:
        if a in self.cfg.fixed_routes:
            return self.cfg.fixed_routes[a]
        pairs = self.topo.two_hop_pairs[a]
        if pairs:
            # saturation gives the initiator a frame for every potential
            # two-hop destination; prefer a relay it has not overheard being
            # captured by another exchange
            free = [p for p in pairs if self.state[p[0]] == CONTEND]
            return self.rng.choice(free if free else pairs)
        # fully-connected cell: no strict two-hop targets exist, so fall
        # back to the saturation abstraction of drawing any relay/target
        neigh = self.comm_idx[a]
        if len(neigh) < 2:
            return None
        b = self.rng.choice(neigh)
        choices = [s for s in neigh if s != b]
        return b, self.rng.choice(choices)

    def data_start_offset(self) -> int:
        """End of an RTS to the scheduled start of the data phase; the
        request-type frames block neighbors only this long."""
        t = self.t
        gap = t.sifs + t.prop
        return gap + t.t_rtc(self.cfg.protocol) + t.rtc_timer() + t.t_cts(
            self.cfg.protocol
        ) + gap

    def coop_span(self) -> int:
        return self.t.t_success(self.cfg.protocol) + 10 * self.t.prop

    def start_cooperation(self, a: int) -> None:
        route = self.pick_route(a)
        if route is None:
            # no two-hop destination exists; the special single-hop fallback
            # is not exercised in the saturation experiments, so just redraw
            self.redraw(a, 0)
            self.schedule_fire(a)
            return
        b, c = route
        ctx = Cooperation(next(self.coop_ids), a, b, c)
        self.engage(a, ctx)
        t = self.t
        frame = fr.Frame(
            fr.RTS, a, dst=b, ta=a, na=c,
            nav_until=self.now + t.t_rts + self.data_start_offset(),
        )
        self.start_tx(frame, t.t_rts)
        self.set_timer(
            "rts_timeout", a, self.now + t.t_rts + t.rts_timer(self.cfg.protocol), ctx
        )

    def eligibility(self, ctx: Cooperation, station: int) -> float:
        if self.cfg.protocol == MODE_EXTENDED_PLUS:
            n_close = len(self.topo.close_idx[ctx.initiator])
            return 1.0 - (1.0 - self.cfg.atc_prob) ** (1 + n_close)
        return self.cfg.atc_prob

    # --- frame-end dispatch -------------------------------------------------
    def dispatch(self, tx: fr.Transmission) -> None:
        kind = tx.frame.kind
        if kind == fr.RTS:
            self.end_rts(tx)
        elif kind == fr.RTC:
            self.end_rtc(tx)
        elif kind == fr.ATC:
            self.apply_frame_nav(tx)
            self.end_atc(tx)
        elif kind == fr.CPP:
            self.apply_frame_nav(tx)
        elif kind == fr.CTS:
            self.end_cts(tx)
        elif kind == fr.DATA:
            self.apply_frame_nav(tx)
            self.end_data(tx)
        elif kind == fr.ACK:
            self.end_ack(tx)

    def apply_frame_nav(self, tx: fr.Transmission) -> None:
        if tx.frame.nav_until <= self.now:
            return
        for j in self.comm_idx[tx.frame.src]:
            if self.can_decode(tx, j):
                self.apply_nav(j, tx.frame.nav_until)

    def end_rts(self, tx: fr.Transmission) -> None:
        a, b, c = tx.frame.src, tx.frame.dst, tx.frame.na
        ctx = self.ctx_of[a]
        if ctx is None or ctx.dead or ctx.phase != "rts":
            return
        for j in self.comm_idx[a]:
            if j != b and self.can_decode(tx, j):
                self.apply_nav(j, tx.frame.nav_until)
        if not self.can_decode(tx, b) or self.state[b] != CONTEND:
            self.met.add_collision(fr.RTS)
            return
        t = self.t
        self.engage(b, ctx)
        ctx.phase = "rtc"
        ea, ts = (), ()
        if self.cfg.protocol in (MODE_EXTENDED, MODE_EXTENDED_PLUS):
            pool = [int(s) for s in self.topo.close_idx[c] if s not in (a, b, c)]
            extras = self.rng.sample(pool, min(self.cfg.n_ea, len(pool)))
            qualified = [c] + extras
            seqs = list(range(len(qualified)))
            self.rng.shuffle(seqs)
            ctx.qualified = tuple(qualified)
            ctx.seq_of = dict(zip(qualified, seqs))
            ea, ts = tuple(extras), tuple(seqs)
        else:
            ctx.qualified = (c,)
            ctx.seq_of = {c: 0}
        frame = fr.Frame(
            fr.RTC, b, dst=c, ta=b, na=a, ea=ea, ts=ts,
            nav_until=self.now + t.prop + t.sifs + self.data_start_offset(),
        )
        self.set_timer("tx_rtc", b, self.now + t.prop + t.sifs, (frame, ctx))

    def end_rtc(self, tx: fr.Transmission) -> None:
        b = tx.frame.src
        ctx = self.ctx_of[b]
        if ctx is None or ctx.dead or ctx.phase != "rtc":
            return
        ctx.phase = "atc_wait"
        ctx.rtc_end = self.now
        t = self.t
        a = ctx.initiator
        self.set_timer("rtc_timeout", b, self.now + t.rtc_timer(), ctx)
        for q in ctx.qualified:
            if not self.can_decode(tx, q):
                self.met.add_collision(fr.RTC)
                continue
            if self.state[q] != CONTEND:
                continue
            if self.rng.random() >= self.eligibility(ctx, q):
                continue
            delay = t.prop + t.sifs + ctx.seq_of[q] * t.slot
            self.set_timer("atc_try", q, self.now + delay, ctx)
        for j in self.comm_idx[b]:
            if j != a and self.can_decode(tx, j):
                self.apply_nav(j, tx.frame.nav_until)
        if self.ctx_of[a] is ctx and self.can_decode(tx, a):
            self.cancel_timers(a)
            if self.cfg.cpp_enabled:
                self.set_timer("tx_cpp", a, self.now + t.prop + t.sifs, ctx)
                guard_base = self.now + t.prop + t.sifs + t.t_cpp
            else:
                guard_base = self.now
            guard = t.rtc_timer() + t.sifs + t.t_cts(self.cfg.protocol) + 4 * t.prop
            self.set_aux_timer("cts_timeout", a, max(guard_base, self.now) + guard, ctx)

    def on_timer(self, name: str, station: int, payload) -> None:
        t = self.t
        if name == "tx_rtc":
            frame, ctx = payload
            if not ctx.dead:
                self.start_tx(frame, t.t_rtc(self.cfg.protocol))
        elif name == "tx_cpp":
            ctx = payload
            if not ctx.dead:
                self.met.cpp_sent += 1
                frame = fr.Frame(
                    fr.CPP, ctx.initiator, dst=ctx.relay, na=ctx.target,
                    nav_until=self.now + t.t_cpp + self.data_start_offset(),
                    copy_of=ctx.ident,
                )
                self.start_tx(frame, t.t_cpp)
        elif name == "atc_try":
            self.try_atc(station, payload)
        elif name == "rtc_timeout":
            self.rtc_timeout(station, payload)
        elif name in ("rts_timeout", "cts_timeout"):
            ctx = payload
            if not ctx.dead and self.ctx_of[station] is ctx and station not in ctx.done:
                self.finish_station(ctx, station, "failure")
        elif name == "tx_cts":
            frame, ctx = payload
            if not ctx.dead:
                self.start_tx(frame, t.t_cts(self.cfg.protocol))
        elif name == "tx_data":
            frame, ctx = payload
            if not ctx.dead:
                tx = self.start_tx(frame, t.t_data)
                ctx.ma_txs[frame.src] = (tx.start, tx.end)
        elif name == "tx_bdata":
            frame, ctx = payload
            if not ctx.dead:
                self.start_tx(frame, t.t_bdata)
        elif name == "tx_fwd":
            frame, ctx = payload
            if not ctx.dead:
                self.start_tx(frame, t.t_data)
        elif name == "tx_back":
            frame, ctx = payload
            if not ctx.dead:
                tx = self.start_tx(frame, t.t_back)
                ctx.back_txs[frame.src] = (tx.start, tx.end)
        elif name == "tx_afback":
            frame, ctx = payload
            if not ctx.dead:
                self.start_tx(frame, t.t_back)
        elif name == "tx_ack":
            frame, ctx = payload
            if not ctx.dead:
                self.start_tx(frame, t.t_ack)
        elif name == "abort":
            ctx = payload
            if self.ctx_of[station] is ctx and station not in ctx.done:
                if station == ctx.relay:
                    self.teardown(ctx)
                else:
                    if station in ctx.data_ids:
                        self.settle_acks(ctx)
                        out = "failure"
                    else:
                        out = "failure" if station == ctx.initiator else None
                    self.finish_station(ctx, station, out)

    def try_atc(self, q: int, ctx: Cooperation) -> None:
        if ctx.dead or ctx.phase != "atc_wait" or self.state[q] != CONTEND:
            return
        for other in ctx.qualified:
            if other == q or not self.sense[other, q]:
                continue
            for s, _ in self.tx_hist[other]:
                if s > ctx.rtc_end:
                    self.met.atc_suppressed += 1
                    return
        self.met.atc_sent += 1
        self.engage(q, ctx)
        resp_dst = ctx.initiator
        if self.cfg.protocol == MODE_EXTENDED_PLUS and q != ctx.target:
            pool = [
                int(s) for s in self.topo.close_idx[ctx.initiator] if s not in (q, ctx.relay)
            ]
            resp_dst = self.rng.choice(pool + [ctx.initiator])
        frame = fr.Frame(
            fr.ATC, q, dst=ctx.relay, ta=q, na=ctx.initiator,
            nav_until=self.now + self.t.t_atc + self.data_start_offset(),
            pilot_order=fr.SWAPPED_ORDER, frame_id=resp_dst,
        )
        self.start_tx(frame, self.t.t_atc)
        self.set_aux_timer("abort", q, self.now + self.coop_span() + 300, ctx)

    def end_atc(self, tx: fr.Transmission) -> None:
        q = tx.frame.src
        ctx = self.ctx_of[q]
        if ctx is None or ctx.dead:
            return
        if ctx.phase != "atc_wait":
            self.finish_station(ctx, q, None)
            return
        b = ctx.relay
        ignore = (ctx.initiator,) if self.cfg.cpp_enabled else ()
        if not self.can_decode(tx, b, ignore=ignore):
            self.met.add_collision(fr.ATC)
            self.finish_station(ctx, q, None)
            return
        ctx.phase = "cts"
        ctx.responder = q
        ctx.resp_dst = tx.frame.frame_id
        self.cancel_timers(b)
        t = self.t
        nav = (
            self.now + t.prop + t.sifs + t.t_cts(self.cfg.protocol)
            + 2 * (t.sifs + t.prop + t.t_bdata)
            + 2 * (t.sifs + t.prop + t.t_back)
            + 4 * t.prop
        )
        frame = fr.Frame(fr.CTS, b, dst=ctx.initiator, ta=q, nav_until=nav)
        self.set_timer("tx_cts", b, self.now + t.prop + t.sifs, (frame, ctx))

    def rtc_timeout(self, b: int, ctx: Cooperation) -> None:
        if ctx.dead or ctx.phase != "atc_wait" or self.ctx_of[b] is not ctx:
            return
        ctx.phase = "cts"
        ctx.one_way = True
        t = self.t
        nav = self.now + t.t_cts(self.cfg.protocol) + 2 * (
            t.sifs + t.prop + t.t_data
        ) + 2 * (t.sifs + t.prop + t.t_ack) + 4 * t.prop
        frame = fr.Frame(fr.CTS, b, dst=ctx.initiator, nav_until=nav, one_way=True)
        self.start_tx(frame, t.t_cts(self.cfg.protocol))

    def end_cts(self, tx: fr.Transmission) -> None:
        b = tx.frame.src
        ctx = self.ctx_of[b]
        if ctx is None or ctx.dead or ctx.phase != "cts":
            return
        ctx.phase = "data"
        t = self.t
        a = ctx.initiator
        for j in self.comm_idx[b]:
            if self.can_decode(tx, j):
                self.apply_nav(j, tx.frame.nav_until)
        a_ok = self.ctx_of[a] is ctx and self.can_decode(tx, a)
        deadline = self.now + self.coop_span() + 300
        jitter = self.cfg.protocol in (MODE_EXTENDED, MODE_EXTENDED_PLUS)
        if ctx.one_way:
            if not a_ok:
                self.met.add_collision(fr.CTS)
                self.teardown(ctx)
                return
            self.cancel_timers(a)
            seq = self.next_pair_seq(a, ctx.target)
            ctx.data_ids[a] = (ctx.target, seq)
            frame = fr.Frame(
                fr.DATA, a, dst=b, na=ctx.target, frame_id=seq,
                payload_bits=t.payload_bits, nav_until=tx.frame.nav_until,
            )
            self.set_timer("tx_data", a, self.now + t.prop + t.sifs, (frame, ctx))
            self.set_aux_timer("abort", a, deadline, ctx)
            self.set_timer("abort", b, deadline, ctx)
            return
        resp = ctx.responder
        r_ok = self.ctx_of[resp] is ctx and tx.frame.ta == resp and self.can_decode(tx, resp)
        if not a_ok and not r_ok:
            self.met.add_collision(fr.CTS)
            self.teardown(ctx)
            return
        if a_ok:
            self.cancel_timers(a)
            seq = self.next_pair_seq(a, ctx.target)
            ctx.data_ids[a] = (ctx.target, seq)
            frame = fr.Frame(
                fr.DATA, a, dst=b, na=ctx.target, frame_id=seq,
                payload_bits=t.payload_bits, nav_until=tx.frame.nav_until,
            )
            d = self.rng.randrange(5) if jitter else 0
            self.set_timer("tx_data", a, self.now + t.prop + t.sifs + d, (frame, ctx))
            self.set_aux_timer("abort", a, deadline, ctx)
        else:
            self.met.add_collision(fr.CTS)
            self.finish_station(ctx, a, "failure")
        if r_ok:
            self.cancel_timers(resp)
            seq = self.next_pair_seq(resp, ctx.resp_dst)
            ctx.data_ids[resp] = (ctx.resp_dst, seq)
            frame = fr.Frame(
                fr.DATA, resp, dst=b, na=ctx.resp_dst, frame_id=seq,
                payload_bits=t.payload_bits, nav_until=tx.frame.nav_until,
                pilot_order=fr.SWAPPED_ORDER,
            )
            d = self.rng.randrange(5) if jitter else 0
            self.set_timer("tx_data", resp, self.now + t.prop + t.sifs + d, (frame, ctx))
            self.set_aux_timer("abort", resp, deadline, ctx)
        elif resp is not None:
            self.finish_station(ctx, resp, None)
        self.set_timer("abort", b, deadline, ctx)

    # --- data phase ----------------------------------------------------------
    def end_data(self, tx: fr.Transmission) -> None:
        sender = tx.frame.src
        ctx = self.ctx_of[sender]
        if ctx is None or ctx.dead:
            return
        t = self.t
        if sender == ctx.relay:
            if ctx.one_way:
                self.end_forward(tx, ctx)
            else:
                self.resolve_data_broadcast(tx, ctx)
            return
        if ctx.one_way:
            b = ctx.relay
            if self.can_decode(tx, b):
                frame = fr.Frame(
                    fr.DATA, b, dst=ctx.target, ta=b, na=ctx.initiator,
                    frame_id=tx.frame.frame_id, payload_bits=t.payload_bits,
                    nav_until=tx.frame.nav_until, one_way=True,
                )
                self.set_timer("tx_fwd", b, self.now + t.prop + t.sifs, (frame, ctx))
            else:
                self.met.add_collision(fr.DATA)
                self.teardown(ctx)
            return
        expected = len(ctx.data_ids)
        ended = sum(1 for s, e in ctx.ma_txs.values() if e <= self.now)
        if ended < expected:
            return
        if ctx.phase != "data":
            return
        ctx.phase = "bdata"
        nav = (
            self.now + t.prop + t.sifs + t.t_bdata
            + 2 * (t.sifs + t.prop + t.t_back)
            + 3 * t.prop
        )
        frame = fr.Frame(fr.DATA, ctx.relay, ta=ctx.relay, frame_id=-ctx.ident, nav_until=nav)
        self.set_timer("tx_bdata", ctx.relay, self.now + t.prop + t.sifs, (frame, ctx))

    def end_forward(self, tx: fr.Transmission, ctx: Cooperation) -> None:
        t = self.t
        c = ctx.target
        a = ctx.initiator
        seq = tx.frame.frame_id
        ctx.ack_pending.append([a, c, seq, False])
        if self.can_decode(tx, c) and not (
            self.state[c] == ENGAGED and self.ctx_of[c] is not ctx
        ):
            self.deliver(ctx, a, c, seq, one_way=True)
            ids = self.ack_ids_for(c, a)
            frame = fr.Frame(fr.ACK, c, dst=ctx.relay, na=a, ack_ids=ids)
            if self.state[c] == CONTEND:
                self.engage(c, ctx)
                self.set_aux_timer("abort", c, self.now + 1000, ctx)
            self.set_timer("tx_ack", c, self.now + t.prop + t.sifs, (frame, ctx))
        else:
            self.met.add_collision(fr.DATA)
            self.settle_acks(ctx)
            self.teardown(ctx)

    def deliver(self, ctx: Cooperation, source: int, dest: int, seq: int, one_way=False) -> None:
        payload = self.t.payload_bits
        self.met.per_station_bits[source] += 2 * payload
        self.met.delivered_bits += 2 * payload
        self.met.data_delivered += 1
        if one_way:
            self.met.coop_one_way += 1
        self.note_received(dest, source, seq)
        ctx.data_delivered_flags[(source, seq)] = True

    def resolve_data_broadcast(self, tx: fr.Transmission, ctx: Cooperation) -> None:
        t = self.t
        a, b, resp = ctx.initiator, ctx.relay, ctx.responder
        ctx.phase = "back"
        senders = tuple(ctx.ma_txs.keys())
        if not senders:
            self.teardown(ctx)
            return
        w0 = min(s for s, _ in ctx.ma_txs.values())
        w1 = max(e for _, e in ctx.ma_txs.values())
        capture_ok = self.window_clear(b, w0, w1, ignore=senders)
        delivered_count = 0
        for source in senders:
            dest, seq = ctx.data_ids[source]
            if dest == source:
                continue
            ctx.ack_pending.append([source, dest, seq, False])
            others = [s for s in senders if s != source]
            ok = capture_ok and self.comm[source, b] and self.can_decode(tx, dest)
            if ok and self.state[dest] == ENGAGED and self.ctx_of[dest] is not ctx:
                ok = False
            if ok:
                # every other component of the forwarded mix must be known
                # to the destination: its own frame, or a close neighbor's
                # frame overheard during the access phase
                for s2 in others:
                    if s2 == dest or not self.comm[s2, b]:
                        continue
                    o0, o1 = ctx.ma_txs[s2]
                    if self.overhear_ok(dest, s2, source, o0, o1):
                        ctx.overheard[dest] = s2
                        continue
                    ok = False
                    break
            if ok:
                self.deliver(ctx, source, dest, seq)
                ctx.expected_back[dest] = source
                delivered_count += 1
            else:
                self.met.add_collision(fr.DATA)
        if delivered_count == 2:
            self.met.coop_two_way += 1
        elif delivered_count == 1:
            self.met.coop_one_way += 1
        if delivered_count == 0:
            self.settle_acks(ctx)
            self.teardown(ctx)
            return
        jitter = self.cfg.protocol in (MODE_EXTENDED, MODE_EXTENDED_PLUS)
        for acker, ackee in ctx.expected_back.items():
            ids = self.ack_ids_for(acker, ackee)
            frame = fr.Frame(fr.ACK, acker, dst=ackee, ack_ids=ids)
            if self.state[acker] == CONTEND:
                self.engage(acker, ctx)
            elif self.ctx_of[acker] is not ctx:
                continue
            d = self.rng.randrange(5) if jitter else 0
            self.set_timer("tx_back", acker, self.now + t.prop + t.sifs + d, (frame, ctx))
            self.set_aux_timer(
                "abort", acker, self.now + 2 * (t.sifs + t.prop + t.t_back) + 500, ctx
            )

    # --- acknowledgement phase -------------------------------------------------
    def end_ack(self, tx: fr.Transmission) -> None:
        sender = tx.frame.src
        ctx = self.ctx_of[sender]
        if ctx is None or ctx.dead:
            return
        t = self.t
        if ctx.one_way:
            if sender == ctx.relay:
                self.end_ack_forward(tx, ctx)
                return
            # the destination's ack travelling back to the relay
            b = ctx.relay
            self.finish_station(ctx, sender, None)
            if self.can_decode(tx, b):
                frame = fr.Frame(
                    fr.ACK, b, dst=ctx.initiator, na=sender, ack_ids=tx.frame.ack_ids
                )
                self.set_timer("tx_ack", b, self.now + t.prop + t.sifs, (frame, ctx))
                ctx.phase = "ackfwd"
            else:
                self.met.add_collision(fr.ACK)
                self.settle_acks(ctx)
                self.teardown(ctx)
            return
        if sender == ctx.relay:
            self.resolve_back_broadcast(tx, ctx)
            return
        expected = len(ctx.expected_back)
        ended = sum(1 for s, e in ctx.back_txs.values() if e <= self.now)
        if ended < expected or ctx.phase != "back":
            return
        ctx.phase = "afback"
        frame = fr.Frame(fr.ACK, ctx.relay, frame_id=-ctx.ident)
        self.set_timer("tx_afback", ctx.relay, self.now + t.prop + t.sifs, (frame, ctx))

    def end_ack_forward(self, tx: fr.Transmission, ctx: Cooperation) -> None:
        a = ctx.initiator
        own = ctx.data_ids.get(a)
        if self.ctx_of[a] is ctx and self.can_decode(tx, a):
            self.process_ack(a, ctx.target, tx.frame.ack_ids)
            if own is not None and own[1] in tx.frame.ack_ids:
                self._mark_acked(ctx, a, own[1])
                self.settle_acks(ctx)
                self.finish_station(ctx, a, "success")
            else:
                self.settle_acks(ctx)
                self.finish_station(ctx, a, "failure")
        else:
            self.met.add_collision(fr.ACK)
            self.settle_acks(ctx)
            if self.ctx_of[a] is ctx:
                self.finish_station(ctx, a, "failure")
        self.teardown(ctx)

    def _mark_acked(self, ctx: Cooperation, src: int, seq: int) -> None:
        for row in ctx.ack_pending:
            if row[0] == src and row[2] == seq:
                row[3] = True

    def resolve_back_broadcast(self, tx: fr.Transmission, ctx: Cooperation) -> None:
        b = ctx.relay
        senders = tuple(ctx.back_txs.keys())
        if senders:
            w0 = min(s for s, _ in ctx.back_txs.values())
            w1 = max(e for _, e in ctx.back_txs.values())
            capture_ok = self.window_clear(b, w0, w1, ignore=senders)
        else:
            capture_ok = False
        for acker, ackee in ctx.expected_back.items():
            own = ctx.data_ids.get(ackee)
            ok = (
                capture_ok
                and acker in ctx.back_txs
                and self.comm[acker, b]
                and self.can_decode(tx, ackee)
            )
            if ok:
                for s2 in senders:
                    if s2 in (acker, ackee) or not self.comm[s2, b]:
                        continue
                    o0, o1 = ctx.back_txs[s2]
                    if self.overhear_ok(ackee, s2, acker, o0, o1):
                        ctx.back_overheard[ackee] = s2
                        continue
                    ok = False
                    break
            if ok:
                ids = self.ack_ids_for(acker, ackee)
                self.process_ack(ackee, acker, ids)
                if own is not None and own[1] in ids:
                    self._mark_acked(ctx, ackee, own[1])
            else:
                self.met.add_collision(fr.ACK)
        self.settle_acks(ctx)
        for source in ctx.data_ids:
            own = ctx.data_ids[source]
            acked = any(
                r[0] == source and r[2] == own[1] and r[3] for r in ctx.ack_pending
            )
            self.finish_station(ctx, source, "success" if acked else "failure")
        for acker in senders:
            if acker not in ctx.data_ids:
                self.finish_station(ctx, acker, None)
        self.teardown(ctx)

    # --- terminations -----------------------------------------------------------
    def finish_station(self, ctx: Cooperation, station: int, outcome: str | None) -> None:
        if station in ctx.done or self.ctx_of[station] is not ctx:
            return
        ctx.done.add(station)
        self.cancel_timers(station)
        self.release(station, outcome)

    def teardown(self, ctx: Cooperation) -> None:
        if ctx.dead:
            return
        ctx.dead = True
        self.settle_acks(ctx)
        everyone = {ctx.initiator, ctx.relay, ctx.target}
        everyone.update(ctx.data_ids.keys())
        everyone.update(ctx.expected_back.keys())
        if ctx.responder is not None:
            everyone.add(ctx.responder)
        for s in everyone:
            if self.ctx_of[s] is ctx and s not in ctx.done:
                out = None
                if s == ctx.initiator or s in ctx.data_ids:
                    out = "failure"
                self.finish_station(ctx, s, out)

    def settle_acks(self, ctx: Cooperation) -> None:
        if ctx.acks_settled:
            return
        ctx.acks_settled = True
        for src, peer, seq, acked in ctx.ack_pending:
            if acked:
                continue
            delivered = ctx.data_delivered_flags.get((src, seq), False)
            if delivered:
                self.met.immediate_ack_lost += 1
            self.unacked.setdefault((src, peer), []).append([seq, delivered])


class CsmaEngine(Engine):
    """Plain request/grant/data/ack exchange on the same event engine."""

    def start_csma(self, a: int) -> None:
        t = self.t
        if a in self.cfg.fixed_routes:
            b = self.cfg.fixed_routes[a][0]
        else:
            neighbors = self.comm_idx[a]
            if not neighbors:
                self.redraw(a, 0)
                self.schedule_fire(a)
                return
            b = self.rng.choice(neighbors)
        ctx = Cooperation(next(self.coop_ids), a, b, b)
        self.engage(a, ctx)
        total = (
            t.t_csma_cts + t.t_data + t.t_csma_ack + 3 * (t.sifs + t.prop) + 3 * t.prop
        )
        frame = fr.Frame(fr.RTS, a, dst=b, nav_until=self.now + t.t_csma_rts + total)
        self.start_tx(frame, t.t_csma_rts)
        self.set_timer("rts_timeout", a, self.now + t.t_csma_rts + t.rts_timer_csma(), ctx)

    def on_timer(self, name: str, station: int, payload) -> None:
        t = self.t
        if name == "rts_timeout":
            ctx = payload
            if not ctx.dead and self.ctx_of[station] is ctx and station not in ctx.done:
                self.finish_station(ctx, station, "failure")
        elif name == "abort":
            ctx = payload
            if self.ctx_of[station] is ctx and station not in ctx.done:
                out = "failure" if station == ctx.initiator else None
                self.finish_station(ctx, station, out)
        elif name in ("tx_cts", "tx_data", "tx_ack"):
            frame, ctx = payload
            if not ctx.dead:
                dur = {"tx_cts": t.t_csma_cts, "tx_data": t.t_data, "tx_ack": t.t_csma_ack}[name]
                self.start_tx(frame, dur)

    def finish_station(self, ctx: Cooperation, station: int, outcome: str | None) -> None:
        if station in ctx.done or self.ctx_of[station] is not ctx:
            return
        ctx.done.add(station)
        self.cancel_timers(station)
        self.release(station, outcome)

    def dispatch_csma(self, tx: fr.Transmission) -> None:
        t = self.t
        f = tx.frame
        if f.kind == fr.RTS:
            a, b = f.src, f.dst
            ctx = self.ctx_of[a]
            if ctx is None or ctx.dead or ctx.phase != "rts":
                return
            ctx.phase = "cts"
            for j in self.comm_idx[a]:
                if j != b and self.can_decode(tx, j):
                    self.apply_nav(j, f.nav_until)
            if self.can_decode(tx, b) and self.state[b] == CONTEND:
                self.engage(b, ctx)
                cts = fr.Frame(fr.CTS, b, dst=a, nav_until=f.nav_until)
                self.set_timer("tx_cts", b, self.now + t.prop + t.sifs, (cts, ctx))
                self.set_aux_timer("abort", b, f.nav_until + 200, ctx)
            else:
                self.met.add_collision(fr.RTS)
        elif f.kind == fr.CTS:
            b = f.src
            ctx = self.ctx_of[b]
            if ctx is None or ctx.dead:
                return
            a = ctx.initiator
            for j in self.comm_idx[b]:
                if j != a and self.can_decode(tx, j):
                    self.apply_nav(j, f.nav_until)
            if self.ctx_of[a] is ctx and self.can_decode(tx, a):
                self.cancel_timers(a)
                data = fr.Frame(
                    fr.DATA, a, dst=b, payload_bits=t.payload_bits, nav_until=f.nav_until
                )
                self.set_timer("tx_data", a, self.now + t.prop + t.sifs, (data, ctx))
                self.set_aux_timer("abort", a, f.nav_until + 200, ctx)
            else:
                self.met.add_collision(fr.CTS)
        elif f.kind == fr.DATA:
            a = f.src
            ctx = self.ctx_of[a]
            if ctx is None or ctx.dead:
                return
            b = f.dst
            if self.ctx_of[b] is ctx and self.can_decode(tx, b):
                ack = fr.Frame(fr.ACK, b, dst=a)
                self.set_timer("tx_ack", b, self.now + t.prop + t.sifs, (ack, ctx))
            else:
                self.met.add_collision(fr.DATA)
        elif f.kind == fr.ACK:
            b = f.src
            ctx = self.ctx_of[b]
            if ctx is None or ctx.dead:
                return
            a = ctx.initiator
            ctx.dead = True
            if self.ctx_of[a] is ctx and self.can_decode(tx, a):
                self.met.csma_success += 1
                self.met.data_delivered += 1
                self.met.per_station_bits[a] += t.payload_bits
                self.met.delivered_bits += t.payload_bits
                self.finish_station(ctx, a, "success")
            else:
                self.met.add_collision(fr.ACK)
                self.finish_station(ctx, a, "failure")
            self.finish_station(ctx, b, None)
