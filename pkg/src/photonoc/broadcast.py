"""Coiled broadcast waveguide.

The coil passes every cluster twice.  Writers modulate on the first pass
(positions 0..63, cluster order) and every cluster reads on the second pass
(positions 64..127).  One token arbitrates the single writer.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Optional

from .arbitration import TokenRing
from .kernel import PHASES_PER_CYCLE, SimulationError, Simulator, ceil_cycle
from .message import BCAST, Message
from .xbar import serialize_cycles

COIL_POSITIONS = 128


def transit_phases(src: int, receiver: int, n: int = 64) -> int:
    """From ``src``'s first-pass position to ``receiver``'s second-pass one."""
    return n + receiver - src


class BroadcastBus:
    def __init__(self, sim: Simulator, ring: TokenRing, channel: int, n: int = 64,
                 receive: Optional[Callable[[int, Message], None]] = None):
        self.sim = sim
        self.ring = ring
        self.channel = channel
        self.n = n
        self.receive = receive
        self.queues = [deque() for _ in range(n)]
        self._cb = [self._make_cb(s) for s in range(n)]
        self.sent = 0
        self.deliveries = 0
        self.log = []  # (broadcast index, receiver, time) when tracing
        self.trace = False

    def _make_cb(self, src):
        return lambda ch: self._on_grant(src)

    def submit(self, msg: Message) -> None:
        """Queue a broadcast at ``msg.src``; the bus token is requested as needed."""
        if msg.kind != BCAST:
            raise SimulationError("only broadcast payloads go on the bus")
        q = self.queues[msg.src]
        msg.injected = self.sim.now
        q.append(msg)
        if len(q) == 1 and self.ring.holder(self.channel) != msg.src:
            self.ring.request(msg.src, self.channel, self._cb[msg.src])

    def broadcast(self, src: int, msg: Message) -> list:
        """Write ``msg`` now; caller holds the bus token.  Returns delivery times."""
        if self.ring.holder(self.channel) != src:
            raise SimulationError(f"cluster {src} broadcast without the bus token")
        tail = self.sim.now + serialize_cycles(msg) * PHASES_PER_CYCLE
        self.ring.release(src, self.channel, tail)
        index = self.sent
        self.sent += 1
        # receivers latching on the same clock edge share one event
        groups = {}
        times = []
        for j in range(self.n):
            t = ceil_cycle(tail + transit_phases(src, j, self.n))
            times.append(t)
            groups.setdefault(t, []).append(j)
        for t, receivers in groups.items():
            self.sim.schedule(t, self._deliver, index, msg, receivers)
        msg.delivered = max(times)
        return times

    def _on_grant(self, src: int) -> None:
        q = self.queues[src]
        self.broadcast(src, q.popleft())
        if q:
            self.ring.request(src, self.channel, self._cb[src])

    def _deliver(self, index: int, msg: Message, receivers: list) -> None:
        for j in receivers:
            self.deliveries += 1
            if self.trace:
                self.log.append((index, j, self.sim.now))
            if self.receive is not None:
                self.receive(j, msg)
