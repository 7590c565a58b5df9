"""Station placement, range sets, and two-hop routing tables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

DEFAULT_CLOSENESS = 0.5      # close-neighbor threshold, fraction of r_c


@dataclass
class Topology:
    positions: np.ndarray              # (n, 2)
    r_c: float = 1.0
    r_i: float = 1.78
    r_s: float = 2.2
    area: tuple[float, float] | None = None   # torus dimensions, None = plane
    closeness: float = DEFAULT_CLOSENESS
    # derived, filled in __post_init__
    dist: np.ndarray = field(default=None, repr=False)
    comm: np.ndarray = field(default=None, repr=False)
    intf: np.ndarray = field(default=None, repr=False)
    sense: np.ndarray = field(default=None, repr=False)
    close: np.ndarray = field(default=None, repr=False)
    comm_idx: list = field(default=None, repr=False)
    sense_idx: list = field(default=None, repr=False)
    two_hop_pairs: list = field(default=None, repr=False)
    close_idx: list = field(default=None, repr=False)

    def __post_init__(self):
        if not self.r_c <= self.r_i <= self.r_s:
            raise ConfigError(
                f"need r_c <= r_i <= r_s, got {self.r_c}, {self.r_i}, {self.r_s}"
            )
        pos = np.asarray(self.positions, dtype=float)
        self.positions = pos
        diff = pos[:, None, :] - pos[None, :, :]
        if self.area is not None:
            w, h = self.area
            diff[..., 0] -= w * np.round(diff[..., 0] / w)
            diff[..., 1] -= h * np.round(diff[..., 1] / h)
        self.dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        np.fill_diagonal(self.dist, np.inf)
        self.comm = self.dist <= self.r_c
        self.intf = self.dist <= self.r_i
        self.sense = self.dist <= self.r_s
        self.close = self.dist <= self.closeness * self.r_c
        self.comm_idx = [np.flatnonzero(r) for r in self.comm]
        self.sense_idx = [np.flatnonzero(r) for r in self.sense]
        self.close_idx = [np.flatnonzero(r) for r in self.close]
        self._build_routes()

    @property
    def n(self) -> int:
        return int(self.positions.shape[0])

    def _build_routes(self):
        """Two-hop routing table: per station, (relay, target) pairs where
        the target is two communication hops away via the relay."""
        self.two_hop_pairs = []
        for a in range(self.n):
            pairs = []
            for b in self.comm_idx[a]:
                for c in self.comm_idx[b]:
                    if c != a and not self.comm[a, c]:
                        pairs.append((int(b), int(c)))
            self.two_hop_pairs.append(pairs)

    def connected_components(self) -> list[list[int]]:
        seen = np.zeros(self.n, dtype=bool)
        comps = []
        for start in range(self.n):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v in self.comm_idx[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(int(v))
            comps.append(sorted(comp))
        return comps

    def require_connected(self):
        comps = self.connected_components()
        if len(comps) > 1:
            sizes = sorted((len(c) for c in comps), reverse=True)
            raise ConfigError(
                f"topology is disconnected under r_c={self.r_c}: "
                f"{len(comps)} components of sizes {sizes}"
            )


def build_topology(
    n: int,
    area: tuple[float, float],
    r_c: float = 1.0,
    r_i: float = 1.78,
    r_s: float = 2.2,
    seed: int = 0,
    torus: bool = True,
    closeness: float = DEFAULT_CLOSENESS,
    check_connected: bool = True,
) -> Topology:
    """Uniform seeded placement over a rectangle.

    Distances wrap around by default (torus), which removes the border
    deficit in neighbor counts and matches the uniform-density assumption of
    the analytic model.
    """
    if n < 3:
        raise ConfigError("need at least three stations for two-way relaying")
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2)) * np.asarray(area, dtype=float)
    topo = Topology(
        pos, r_c, r_i, r_s, area=tuple(area) if torus else None, closeness=closeness
    )
    if check_connected:
        topo.require_connected()
    return topo


def single_cell(n: int, seed: int = 0, side: float = 0.7, **ranges) -> Topology:
    """All stations mutually within communication range (max distance < 1)."""
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2)) * side
    kw = {"r_c": 1.0, "r_i": 1.78, "r_s": 2.2}
    kw.update(ranges)
    return Topology(pos, area=None, **kw)


def fairness_topology(r_i: float = 1.78, r_s: float = 1.5) -> Topology:
    """Two parallel three-station chains for the channel-capture experiment.

    Within each chain the neighbor spacing is 0.8 and the two relays are 1.2
    apart, so the two groups are mutually outside communication range while
    every cross pair is inside the 1.78 interference range.  The default
    sensing range leaves the cross-chain 1.44 pairs sensed but the 2.0 pairs
    unsensed; with full mutual sensing no station could ever run its backoff
    down during the other group's handshake gaps (every gap is shorter than
    DIFS), and the capture effect the protection packet exists to stop could
    not occur at all.
    """
    pos = np.array(
        [
            [0.0, 0.8],     # A  (exchanges with C via B)
            [0.0, 0.0],     # B  relay
            [0.0, -0.8],    # C
            [1.2, 0.8],     # D  (exchanges with F via E)
            [1.2, 0.0],     # E  relay
            [1.2, -0.8],    # F
        ]
    )
    return Topology(pos, r_c=1.0, r_i=r_i, r_s=r_s, area=None)


FAIRNESS_GROUPS = ((0, 1, 2), (3, 4, 5))
FAIRNESS_ROUTES = {0: (1, 2), 2: (1, 0), 3: (4, 5), 5: (4, 3)}
