"""802.11a-style timing constants and cooperation period lengths.

All times are integer microseconds.  Frame airtimes are OFDM symbol aligned:
20 us of preamble/PLCP plus 4 us per data symbol, where a symbol carries
``4 * rate_mbps`` bits and the payload is padded with 16 service and 6 tail
bits.  Keeping everything integer makes the simulators exactly deterministic
and lets the analytic solvers share the same period constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

MODE_BASIC = "basic"
MODE_EXTENDED = "extended"
MODE_EXTENDED_PLUS = "extended-plus"
TREAN_MODES = (MODE_BASIC, MODE_EXTENDED, MODE_EXTENDED_PLUS)


@dataclass(frozen=True)
class TimingConfig:
    slot: int = 9
    sifs: int = 16
    difs: int = 34
    prop: int = 1                 # one-way propagation delay
    plcp: int = 20                # preamble + PLCP header
    symbol_us: int = 4
    ctrl_rate_mbps: int = 6
    data_rate_mbps: int = 54
    payload_bytes: int = 1500
    mac_header_bytes: int = 28
    overlap_slack: int = 4        # broadcast-phase stretch for imperfect overlap

    # control frame sizes (bytes); the relay-protocol frames carry the extra
    # address fields on top of the standard 802.11 layouts
    rts_bytes: int = 26           # 20 standard + 6 next-two-hop address
    rtc_bytes: int = 32
    rtc_ext_bytes: int = 45       # + 2 EA fields + TS byte
    atc_bytes: int = 26
    cts_bytes: int = 20
    cts_ext_plus_bytes: int = 26  # + EA field for the backward destination
    ack_bytes: int = 28           # RA + 3 x 4-byte frame IDs
    csma_rts_bytes: int = 20
    csma_cts_bytes: int = 14
    csma_ack_bytes: int = 14

    n_ea: int = 2

    def airtime(self, nbytes: int, rate_mbps: int) -> int:
        """Symbol-aligned airtime of a frame in microseconds."""
        bits = 16 + 6 + 8 * nbytes
        per_symbol = self.symbol_us * rate_mbps
        return self.plcp + self.symbol_us * math.ceil(bits / per_symbol)

    # --- individual frame airtimes ------------------------------------
    @property
    def t_rts(self) -> int:
        return self.airtime(self.rts_bytes, self.ctrl_rate_mbps)

    def t_rtc(self, mode: str = MODE_BASIC) -> int:
        nbytes = self.rtc_bytes if mode == MODE_BASIC else self.rtc_ext_bytes
        return self.airtime(nbytes, self.ctrl_rate_mbps)

    @property
    def t_atc(self) -> int:
        return self.airtime(self.atc_bytes, self.ctrl_rate_mbps)

    def t_cts(self, mode: str = MODE_BASIC) -> int:
        nbytes = (
            self.cts_ext_plus_bytes if mode == MODE_EXTENDED_PLUS else self.cts_bytes
        )
        return self.airtime(nbytes, self.ctrl_rate_mbps)

    @property
    def t_ack(self) -> int:
        return self.airtime(self.ack_bytes, self.ctrl_rate_mbps)

    @property
    def t_cpp(self) -> int:
        # the channel protection packet is a byte-identical copy of the RTS
        return self.t_rts

    @property
    def t_data(self) -> int:
        return self.airtime(
            self.mac_header_bytes + self.payload_bytes, self.data_rate_mbps
        )

    @property
    def t_bdata(self) -> int:
        return self.t_data + self.overlap_slack

    @property
    def t_back(self) -> int:
        return self.t_ack + self.overlap_slack

    @property
    def t_csma_rts(self) -> int:
        return self.airtime(self.csma_rts_bytes, self.ctrl_rate_mbps)

    @property
    def t_csma_cts(self) -> int:
        return self.airtime(self.csma_cts_bytes, self.ctrl_rate_mbps)

    @property
    def t_csma_ack(self) -> int:
        return self.airtime(self.csma_ack_bytes, self.ctrl_rate_mbps)

    @property
    def payload_bits(self) -> int:
        return 8 * self.payload_bytes

    # --- timers ---------------------------------------------------------
    def rts_timer(self, mode: str = MODE_BASIC) -> int:
        """Wait after an RTS for the relay's reply to be fully overheard."""
        return self.sifs + self.t_rtc(mode) + 2 * self.prop

    def rts_timer_csma(self) -> int:
        return self.sifs + self.t_csma_cts + 2 * self.prop

    def rtc_timer(self) -> int:
        """Wait after an RTC for an answer from any qualified station.

        DIFS = SIFS + 2 slots with the default constants, so this window
        covers sequence numbers up to ``n_ea`` exactly.
        """
        return self.difs + self.t_atc + 2 * self.prop

    def max_n_ea(self) -> int:
        # a qualified station's wait must stay below DIFS
        return (self.difs - self.sifs) // self.slot

    # --- cooperation period lengths --------------------------------------
    def t_success(self, mode: str = MODE_BASIC, atc_seq: int = 0) -> int:
        """Channel time of a full two-way cooperation.

        Eight frames each followed by SIFS plus propagation: the request,
        the cooperate request, the answer (superposed with the protection
        packet), the authorization, the two data phases (multiple access
        then broadcast) and the two acknowledgement phases.
        """
        gap = self.sifs + self.prop
        frames = (
            self.t_rts
            + self.t_rtc(mode)
            + self.t_atc
            + self.t_cts(mode)
            + 2 * self.t_bdata
            + 2 * self.t_back
        )
        return frames + 8 * gap + atc_seq * self.slot

    def t_one_way(self, mode: str = MODE_BASIC) -> int:
        """Channel time of a one-way fallback after the answer window expires."""
        gap = self.sifs + self.prop
        frames = (
            self.t_rts
            + self.t_rtc(mode)
            + self.t_cts(mode)
            + self.t_data          # initiator -> relay
            + self.t_data          # relay -> destination
            + self.t_ack           # destination -> relay
            + self.t_ack           # relay -> initiator
        )
        # the answer window is spent waiting on the relay's timer
        return frames + 6 * gap + self.rtc_timer()

    @property
    def t_collision(self) -> int:
        return self.t_rts + self.difs + self.prop

    @property
    def t_success_csma(self) -> int:
        gap = self.sifs + self.prop
        return (
            self.t_csma_rts
            + self.t_csma_cts
            + self.t_data
            + self.t_csma_ack
            + 3 * gap
            + self.difs
            + self.prop
        )

    @property
    def t_collision_csma(self) -> int:
        return self.t_csma_rts + self.difs + self.prop


DEFAULT_TIMING = TimingConfig()
