"""Run results: delivered payload, collision counters, channel accounting."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Metrics:
    duration_us: int = 0
    n_stations: int = 0
    delivered_bits: float = 0.0
    per_station_bits: list = field(default_factory=list)
    coop_two_way: int = 0
    coop_one_way: int = 0
    csma_success: int = 0
    attempts: int = 0
    collisions: dict = field(default_factory=dict)     # per frame kind
    idle_us: int = 0
    success_us: int = 0
    collision_us: int = 0
    data_delivered: int = 0
    immediate_ack_lost: int = 0
    final_unacked: int = 0
    atc_sent: int = 0
    atc_suppressed: int = 0
    cpp_sent: int = 0
    seed: int = 0

    def add_collision(self, kind: str):
        self.collisions[kind] = self.collisions.get(kind, 0) + 1

    @property
    def throughput_mbps(self) -> float:
        if self.duration_us <= 0:
            return 0.0
        return self.delivered_bits / self.duration_us

    @property
    def immediate_ack_loss_rate(self) -> float:
        if self.data_delivered == 0:
            return 0.0
        return self.immediate_ack_lost / self.data_delivered

    @property
    def final_unacked_rate(self) -> float:
        if self.data_delivered == 0:
            return 0.0
        return self.final_unacked / self.data_delivered

    def to_dict(self) -> dict:
        out = {
            "duration_us": self.duration_us,
            "n_stations": self.n_stations,
            "delivered_bits": self.delivered_bits,
            "throughput_mbps": self.throughput_mbps,
            "coop_two_way": self.coop_two_way,
            "coop_one_way": self.coop_one_way,
            "csma_success": self.csma_success,
            "attempts": self.attempts,
            "idle_us": self.idle_us,
            "success_us": self.success_us,
            "collision_us": self.collision_us,
            "data_delivered": self.data_delivered,
            "immediate_ack_lost": self.immediate_ack_lost,
            "final_unacked": self.final_unacked,
            "atc_sent": self.atc_sent,
            "atc_suppressed": self.atc_suppressed,
            "cpp_sent": self.cpp_sent,
            "seed": self.seed,
        }
        out["collisions"] = dict(self.collisions)
        out["per_station_bits"] = list(self.per_station_bits)
        return out
