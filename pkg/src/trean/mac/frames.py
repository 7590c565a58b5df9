"""MAC frame records used by the event-driven simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

RTS = "rts"
RTC = "rtc"
ATC = "atc"
CTS = "cts"
CPP = "cpp"
DATA = "data"
ACK = "ack"

NORMAL_ORDER = "normal"
SWAPPED_ORDER = "swapped"


@dataclass
class Frame:
    kind: str
    src: int
    dst: int | None = None             # RA
    ta: int | None = None
    na: int | None = None              # next-two-hop address
    ea: tuple = ()                     # extra qualified addresses
    ts: tuple = ()                     # their sequence numbers
    ack_ids: tuple = ()                # up to 3 acknowledged frame ids
    one_way: bool = False              # special CTS marker
    frame_id: int | None = None
    payload_bits: int = 0
    nav_until: int = 0
    pilot_order: str = NORMAL_ORDER
    copy_of: int | None = None         # CPP: id of the buffered request

    def __post_init__(self):
        if len(self.ack_ids) > 3:
            raise ValueError("an acknowledgement carries at most 3 frame ids")


@dataclass
class Transmission:
    frame: Frame
    start: int
    end: int
    tx_id: int = field(default=-1)

    def overlaps(self, t0: int, t1: int) -> bool:
        return self.start < t1 and t0 < self.end
