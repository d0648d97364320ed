"""Off-stack memory controllers.

A controller owns an outbound and a return link to its memory modules and
schedules both itself, so neither needs arbitration.  Requests are served
FIFO: serialize the command (plus data for writes) on the outbound link,
wait a fixed access time, then serialize the line on the return link.

Link time is kept in byte units (``cycle * width``) so fractional occupancy
is exact: a 3 B/cycle link sustains exactly 3 B/cycle back to back.

The controller's request queue is the flow-control point for the whole
request path.  Senders take a credit before a request enters the
interconnect, and the credit comes back when the response leaves the
controller, so a delivered request never has to wait for buffer space.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

from .config import CLOCK_HZ, HEADER_BYTES, LINE_BYTES
from .kernel import PHASES_PER_CYCLE, SimulationError, Simulator
from .message import READ_REQ, Message

ACCESS_NS = 20
ACCESS_CYCLES = ACCESS_NS * CLOCK_HZ // 1_000_000_000  # 100


@dataclass(frozen=True)
class MemoryLinkSpec:
    kind: str
    out_width: int  # bytes per cycle, controller -> memory
    ret_width: int  # bytes per cycle, memory -> controller
    access_cycles: int = ACCESS_CYCLES

    @property
    def peak_bytes_per_s(self) -> float:
        """Peak of one controller counting both directions."""
        return (self.out_width + self.ret_width) * CLOCK_HZ

    @property
    def read_ceiling_bytes_per_s(self) -> float:
        """Payload ceiling of one controller's return link."""
        return self.ret_width * CLOCK_HZ


# a fiber pair of 64 wavelengths at 10 Gb/s each way: 80 GB/s per direction
OCM = MemoryLinkSpec("ocm", 16, 16)
# 12 signals at 10 Gb/s full duplex: 15 GB/s per direction
ECM = MemoryLinkSpec("ecm", 3, 3)
LINK_SPECS = {"ocm": OCM, "ecm": ECM}


def aggregate_bandwidth(spec: MemoryLinkSpec, controllers: int = 64) -> float:
    """Quoted aggregate bandwidth in bytes/s over all controllers.

    The optical link is quoted as the sum of its two fibers, the electrical
    link as one direction of its full-duplex channel.
    """
    per = spec.peak_bytes_per_s if spec.kind == "ocm" else spec.ret_width * CLOCK_HZ
    return per * controllers


def serialize_cycles(nbytes: int, width: int) -> int:
    return -(-nbytes // width)


class CreditPool:
    """Counting semaphore with FIFO waiters."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.in_use = 0
        self.waiters: deque = deque()

    def acquire(self, cb: Callable[[], None]) -> bool:
        """Take a credit now (returns True) or queue ``cb`` for later."""
        if self.in_use < self.capacity and not self.waiters:
            self.in_use += 1
            return True
        self.waiters.append(cb)
        return False

    def release(self) -> None:
        if self.in_use <= 0:
            raise SimulationError("credit released twice")
        if self.waiters:
            self.waiters.popleft()()
        else:
            self.in_use -= 1


class MemoryController:
    """One controller with its FIFO queue and two links.

    ``emit(msg)`` is called at the cycle the response (or write ack) is
    complete at the controller.  The caller hands the response to the hub
    and later calls :meth:`retire` to return the request's credit.
    """

    def __init__(self, sim: Simulator, cid: int, spec: MemoryLinkSpec,
                 depth: int, emit: Callable[[Message], None]):
        self.sim = sim
        self.cid = cid
        self.spec = spec
        self.credits = CreditPool(depth)
        self.emit = emit
        self._out_free = 0  # byte units
        self._ret_free = 0
        self._last_done = 0  # cycles
        self.reads = 0
        self.writes = 0
        self.payload_bytes = 0
        self.busy_ret_bytes = 0

    def access(self, msg: Message) -> int:
        """Accept a request arriving now; returns the completion cycle."""
        if msg.dst != self.cid or not msg.is_request:
            raise SimulationError(f"controller {self.cid} got {msg.kind} for {msg.dst}")
        spec = self.spec
        now_c = self.sim.now // PHASES_PER_CYCLE
        ow = spec.out_width
        start = max(self._out_free, now_c * ow)
        self._out_free = end = start + msg.size_bytes
        done = -(-end // ow) + spec.access_cycles
        if msg.kind == READ_REQ:
            rw = spec.ret_width
            start = max(self._ret_free, done * rw)
            self._ret_free = end = start + LINE_BYTES
            done = -(-end // rw)
            self.reads += 1
            self.busy_ret_bytes += LINE_BYTES
        else:
            self.writes += 1
        # responses leave in arrival order
        if done < self._last_done:
            done = self._last_done
        self._last_done = done
        self.payload_bytes += LINE_BYTES
        self.sim.schedule(done * PHASES_PER_CYCLE, self.emit, msg)
        return done

    def zero_load_cycles(self, kind: str = READ_REQ) -> int:
        spec = self.spec
        req = HEADER_BYTES if kind == READ_REQ else HEADER_BYTES + LINE_BYTES
        total = serialize_cycles(req, spec.out_width) + spec.access_cycles
        if kind == READ_REQ:
            total += serialize_cycles(LINE_BYTES, spec.ret_width)
        return total
