"""64x64 optical crossbar built from many-writer, single-reader channels.

Channel ``d`` is read only by cluster ``d``; any other cluster writes it
after diverting channel ``d``'s token.  A channel moves one 64 B phit per
cycle, so a header is one cycle and a header plus cache line two.  Light
travels one cluster position per phase in increasing cluster order, so the
tail of a message sent from ``s`` reaches ``d`` ``(d - s) mod 64`` phases
after it leaves; the receiver latches it at its next clock edge.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .arbitration import TokenRing
from .config import CLOCK_HZ, HEADER_BYTES, LINE_BYTES
from .kernel import PHASES_PER_CYCLE, SimulationError, Simulator, ceil_cycle
from .message import Message
from .network import Network, msg_class

PHIT_BYTES = 64
XBAR_POWER_W = 26.0


@dataclass(frozen=True)
class ChannelSpec:
    home: int
    wavelengths: int = 256
    waveguides: int = 4
    gbps_per_wavelength: int = 10  # 5 GHz, both clock edges

    @property
    def phit_bytes(self) -> int:
        return self.wavelengths * 2 // 8

    @property
    def bits_per_s(self) -> float:
        return self.wavelengths * self.gbps_per_wavelength * 1e9


def serialize_cycles(msg_or_size) -> int:
    """Channel occupancy in cycles: one cycle per 64 B phit."""
    size = msg_or_size if isinstance(msg_or_size, int) else msg_or_size.size_bytes
    if size not in (HEADER_BYTES, HEADER_BYTES + LINE_BYTES):
        raise SimulationError(f"crossbar cannot frame a {size} B message")
    return -(-size // PHIT_BYTES)


def propagation_phases(src: int, dst: int, n: int = 64) -> int:
    """Distance in cluster positions travelling in increasing order (1..n)."""
    return (dst - src) % n or n


def propagation_cycles(src: int, dst: int, n: int = 64) -> int:
    return -(-propagation_phases(src, dst, n) // PHASES_PER_CYCLE)


class Crossbar(Network):
    kind = "xbar"

    def __init__(self, sim: Simulator, ring: TokenRing, n: int = 64,
                 queue_depth: int = 16, deliver=None):
        super().__init__(sim, n, queue_depth, deliver)
        self.ring = ring
        self.voq = [[deque() for _ in range(n)] for _ in range(n)]
        self._grant_cb = [self._make_cb(s) for s in range(n)]
        self.channel_busy = [0] * n  # phases of occupancy
        self.channel_msgs = [0] * n
        self._tail = [-1] * n  # last tail time per channel, for the overlap check
        self.max_in_flight = 0

    def _make_cb(self, src):
        return lambda ch: self._on_grant(src, ch)

    def inject(self, msg: Message) -> None:
        src, dst = msg.src, msg.dst
        if src == dst:
            raise SimulationError("self-message routed to the crossbar")
        msg.injected = self.sim.now
        q = self.voq[src][dst]
        q.append(msg)
        if len(q) == 1 and self.ring.holder(dst) != src:
            self.ring.request(src, dst, self._grant_cb[src])

    def send(self, src: int, msg: Message) -> int:
        """Transmit ``msg`` now; caller must hold channel ``msg.dst``'s token.

        Returns the delivery time (phases).  The token is released at the tail.
        """
        dst = msg.dst
        if self.ring.holder(dst) != src:
            raise SimulationError(f"cluster {src} sent on channel {dst} without its token")
        now = self.sim.now
        if now < self._tail[dst]:
            raise SimulationError(f"channel {dst} occupancy overlap")
        occupancy = serialize_cycles(msg) * PHASES_PER_CYCLE
        tail = now + occupancy
        self._tail[dst] = tail
        self.ring.release(src, dst, tail)
        self.channel_busy[dst] += occupancy
        self.channel_msgs[dst] += 1
        self.messages += 1
        self.in_flight += 1
        if self.in_flight > self.max_in_flight:
            self.max_in_flight = self.in_flight
        arrive = ceil_cycle(tail + propagation_phases(src, dst, self.n))
        msg.delivered = arrive
        self.sim.schedule(arrive, self._delivered, msg)
        return arrive

    def _on_grant(self, src: int, ch: int) -> None:
        q = self.voq[src][ch]
        msg = q.popleft()
        self.send(src, msg)
        self._free_slot(src, msg_class(msg))
        if q:
            self.ring.request(src, ch, self._grant_cb[src])

    def energy_joules(self, runtime_s: float) -> float:
        return XBAR_POWER_W * runtime_s

    def utilization(self, runtime_phases: int):
        if runtime_phases <= 0:
            return [0.0] * self.n
        return [b / runtime_phases for b in self.channel_busy]


def aggregate_bandwidth(n: int = 64) -> float:
    """Sum of channel bandwidths in bytes/s."""
    return n * ChannelSpec(0).phit_bytes * CLOCK_HZ
