"""Electrical 2D mesh with dimension-order wormhole routing.

The mesh is modelled at worm granularity.  A message is a worm of
``ceil(size / width)`` flits walking a path of channels: the source
injection channel, one link per hop, and the destination ejection channel.
The head takes each channel in turn (FIFO among waiting heads); a link adds
5 cycles of head latency, injection and ejection add none.  Body flits
stream one per cycle behind the head.

Input buffers hold ``depth`` flits with credit flow control, so flit ``f``
can leave a channel only once flit ``f - depth`` has left the next one.
That gives the departure recurrence used in :meth:`Mesh._depart` and lets a
channel's release (tail gone) be computed as soon as the head has claimed
the channel ``(flits - 1) // depth`` hops further on.  A channel is never
shared by two worms while held, so worms never interleave on a link.
"""

from __future__ import annotations

from collections import deque
from typing import List, Tuple

from .config import CLOCK_HZ, GRID_RADIX
from .kernel import PHASES_PER_CYCLE, Simulator
from .message import Message
from .network import Network, msg_class

HOP_CYCLES = 5
ENERGY_PER_HOP_J = 196e-12

PLUS_X, MINUS_X, PLUS_Y, MINUS_Y, LOCAL = "+X", "-X", "+Y", "-Y", "local"
_DELTA = {PLUS_X: (1, 0), MINUS_X: (-1, 0), PLUS_Y: (0, 1), MINUS_Y: (0, -1)}


def link_width(bisection_bytes_per_s: float, radix: int = GRID_RADIX) -> int:
    """Bytes/cycle per direction: the bisection cuts ``radix`` links, both ways."""
    return round(bisection_bytes_per_s / (radix * 2 * CLOCK_HZ))


HMESH_WIDTH = link_width(1.28e12)  # 16
LMESH_WIDTH = link_width(0.64e12)  # 8


def coords(cid: int, radix: int = GRID_RADIX) -> Tuple[int, int]:
    return divmod(cid, radix)


def route_step(cur: Tuple[int, int], dst: Tuple[int, int]) -> str:
    """Output port at ``cur``: correct the first coordinate, then the second."""
    if cur[0] < dst[0]:
        return PLUS_X
    if cur[0] > dst[0]:
        return MINUS_X
    if cur[1] < dst[1]:
        return PLUS_Y
    if cur[1] > dst[1]:
        return MINUS_Y
    return LOCAL


def route(src: int, dst: int, radix: int = GRID_RADIX) -> List[Tuple[int, str]]:
    """``[(router, port), ...]`` for each hop taken from ``src`` to ``dst``."""
    cur = coords(src, radix)
    goal = coords(dst, radix)
    hops = []
    while True:
        port = route_step(cur, goal)
        if port == LOCAL:
            return hops
        hops.append((cur[0] * radix + cur[1], port))
        dx, dy = _DELTA[port]
        cur = (cur[0] + dx, cur[1] + dy)


def hop_count(src: int, dst: int, radix: int = GRID_RADIX) -> int:
    (a, b), (c, d) = coords(src, radix), coords(dst, radix)
    return abs(a - c) + abs(b - d)


class Channel:
    __slots__ = ("name", "latency", "holder", "free_at", "waiters", "busy", "worms")

    def __init__(self, name, latency: int):
        self.name = name
        self.latency = latency * PHASES_PER_CYCLE
        self.holder = None
        self.free_at = 0
        self.waiters = deque()
        self.busy = 0
        self.worms = 0


class Worm:
    __slots__ = ("msg", "flits", "path", "acq", "k", "released", "lookahead", "cls")

    def __init__(self, msg, flits, path, lookahead):
        self.msg = msg
        self.flits = flits
        self.path = path
        self.acq: List[int] = []
        self.k = 0
        self.released = 0
        self.lookahead = lookahead
        self.cls = msg_class(msg)


class Mesh(Network):
    kind = "mesh"

    def __init__(self, sim: Simulator, width: int, n: int = 64, radix: int = GRID_RADIX,
                 buffer_depth: int = 16, queue_depth: int = 16, deliver=None):
        super().__init__(sim, n, queue_depth, deliver)
        self.width = width
        self.radix = radix
        self.depth = buffer_depth
        self.inj = [Channel(("inj", r), 0) for r in range(n)]
        self.ej = [Channel(("ej", r), 0) for r in range(n)]
        self.links = {}
        for r in range(n):
            i, j = coords(r, radix)
            for port, (dx, dy) in _DELTA.items():
                if 0 <= i + dx < radix and 0 <= j + dy < radix:
                    self.links[(r, port)] = Channel((r, port), HOP_CYCLES)
        self._paths = {}
        self.message_hops = 0
        self.flit_hops = 0

    def flits(self, msg_or_size) -> int:
        size = msg_or_size if isinstance(msg_or_size, int) else msg_or_size.size_bytes
        return -(-size // self.width)

    def path(self, src: int, dst: int) -> list:
        key = (src, dst)
        p = self._paths.get(key)
        if p is None:
            p = [self.inj[src]] + [self.links[h] for h in route(src, dst, self.radix)] + [self.ej[dst]]
            self._paths[key] = p
        return p

    def inject(self, msg: Message) -> None:
        msg.injected = self.sim.now
        path = self.path(msg.src, msg.dst)
        f = self.flits(msg)
        worm = Worm(msg, f, path, (f - 1) // self.depth)
        hops = len(path) - 2
        msg.hops = hops
        self.messages += 1
        self.in_flight += 1
        self.message_hops += hops
        self.flit_hops += hops * f
        self._request(worm, self.sim.now)

    def _request(self, worm: Worm, t: int) -> None:
        ch = worm.path[worm.k]
        if ch.holder is None:
            self._acquire(ch, worm, t if t > ch.free_at else ch.free_at)
        else:
            ch.waiters.append(worm)

    def _acquire(self, ch: Channel, worm: Worm, a: int) -> None:
        ch.holder = worm
        ch.worms += 1
        worm.acq.append(a)
        k = worm.k
        last = len(worm.path) - 1
        if k == last:
            for h in range(worm.released, last + 1):
                self._release(worm, h)
            t = a + (worm.flits - 1) * PHASES_PER_CYCLE
            worm.msg.delivered = t
            self.sim.schedule(t, self._delivered, worm.msg)
            return
        h = k - worm.lookahead
        if h >= worm.released:
            for hh in range(worm.released, h + 1):
                self._release(worm, hh)
        nxt = a + ch.latency
        if nxt == self.sim.now:
            worm.k = k + 1
            self._request(worm, nxt)
        else:
            self.sim.schedule(nxt, self._advance, worm)

    def _advance(self, worm: Worm) -> None:
        worm.k += 1
        self._request(worm, self.sim.now)

    def _depart(self, worm: Worm, h: int, f: int) -> int:
        """Time flit ``f`` leaves over channel ``h`` (phases)."""
        t = worm.acq[h] + f * PHASES_PER_CYCLE
        if f >= self.depth and h < len(worm.path) - 1:
            d = self._depart(worm, h + 1, f - self.depth)
            if d > t:
                t = d
        return t

    def _release(self, worm: Worm, h: int) -> None:
        ch = worm.path[h]
        end = self._depart(worm, h, worm.flits - 1) + PHASES_PER_CYCLE
        worm.released = h + 1
        ch.holder = None
        ch.free_at = end
        ch.busy += end - worm.acq[h]
        if h == 0:
            self._free_slot(worm.msg.src, worm.cls)
        if ch.waiters:
            nxt = ch.waiters.popleft()
            self._acquire(ch, nxt, end)

    def energy_joules(self, runtime_s: float) -> float:
        return self.message_hops * ENERGY_PER_HOP_J

    def link_utilization(self, runtime_phases: int):
        if runtime_phases <= 0:
            return {}
        return {name: ch.busy / runtime_phases for name, ch in self.links.items()}
