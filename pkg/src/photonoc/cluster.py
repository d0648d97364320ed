"""Cluster request machinery: MSHRs and the hub.

The hub is a one-cycle pass between the MSHRs, the local memory controller
and the network interface.  Every queue is bounded; when a downstream queue
is full the message waits where it is and the producer stalls.
"""

from __future__ import annotations

from collections import deque
from typing import Dict, List, Optional, Tuple

from .config import NUM_CLUSTERS
from .kernel import PHASES_PER_CYCLE, SimulationError, ceil_cycle
from .message import READ_REQ, WRITE_REQ, Message
from .network import REQ, RESP
from .traffic import controller_of

HUB_CYCLES = 1
HUB = HUB_CYCLES * PHASES_PER_CYCLE

ACCEPTED, MERGED, STALLED = "accepted", "merged", "stalled"
LOCAL_MEMORY, INTERCONNECT = "local-memory", "interconnect"


def cluster_coords(cid: int, radix: int = 8) -> Tuple[int, int]:
    return divmod(cid, radix)


def cluster_id(i: int, j: int, radix: int = 8) -> int:
    return i * radix + j


class Mshr:
    """Outstanding lines of one cluster; threads missing on the same line merge."""

    def __init__(self, capacity: int = 64):
        self.capacity = capacity
        self.entries: Dict[int, list] = {}  # line address -> [(requester, issue time)]
        self.peak = 0

    def __len__(self):
        return len(self.entries)

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    def lookup(self, address: int) -> Optional[list]:
        return self.entries.get(address)

    def allocate(self, address: int, requester, t: int) -> None:
        if address in self.entries:
            raise SimulationError(f"line {address:#x} already outstanding")
        if self.full:
            raise SimulationError("MSHR overflow")
        self.entries[address] = [(requester, t)]
        if len(self.entries) > self.peak:
            self.peak = len(self.entries)

    def merge(self, address: int, requester, t: int) -> None:
        waiters = self.entries[address]
        if any(r is requester for r, _ in waiters):
            raise SimulationError("thread missed twice on an outstanding line")
        waiters.append((requester, t))

    def retire(self, address: int) -> list:
        return self.entries.pop(address)


class Cluster:
    """One cluster as seen by the memory system.

    Requesters are objects with ``miss_done(cluster, address, latency)`` and,
    for stalls, nothing else: a stalled miss is retried automatically when a
    slot frees.
    """

    def __init__(self, system, cid: int, mshr_capacity: int = 64):
        self.system = system
        self.sim = system.sim
        self.cid = cid
        self.mshr = Mshr(mshr_capacity)
        self.stalled: deque = deque()
        self.req_out: deque = deque()  # credited requests waiting for a send slot
        self.resp_out: deque = deque()  # responses from the local controller
        self.issued = 0
        self.merged = 0
        self.completed = 0

    # request side ---------------------------------------------------------

    def accept_miss(self, requester, address: int, write: bool = False,
                    created: Optional[int] = None) -> str:
        now = self.sim.now
        created = now if created is None else created
        if self.mshr.lookup(address) is not None:
            self.mshr.merge(address, requester, created)
            self.merged += 1
            return MERGED
        if self.mshr.full or self.stalled:
            self.stalled.append((requester, address, write, created))
            return STALLED
        self._allocate(requester, address, write, created)
        return ACCEPTED

    def _allocate(self, requester, address, write, created):
        self.mshr.allocate(address, requester, created)
        self.issued += 1
        dst = controller_of(address, self.system.n)
        msg = Message(WRITE_REQ if write else READ_REQ, self.cid, dst, address, created)
        self.system.requests_in_flight += 1
        ctrl = self.system.memories[dst]
        if ctrl.credits.acquire(lambda: self._credited(msg)):
            self._credited(msg)

    def route(self, msg: Message) -> str:
        return LOCAL_MEMORY if msg.is_request and msg.dst == self.cid else INTERCONNECT

    def _credited(self, msg: Message) -> None:
        t = ceil_cycle(self.sim.now) + HUB
        if self.route(msg) == LOCAL_MEMORY:
            self.sim.schedule(t, self.system.memories[self.cid].access, msg)
            return
        net = self.system.network
        if not self.req_out and net.has_space(self.cid, REQ):
            net.reserve(self.cid, REQ)
            self.sim.schedule(t, net.inject, msg)
        else:
            self.req_out.append(msg)

    def on_space(self) -> None:
        net = self.system.network
        cid = self.cid
        t = ceil_cycle(self.sim.now) + HUB
        while self.req_out and net.has_space(cid, REQ):
            net.reserve(cid, REQ)
            self.sim.schedule(t, net.inject, self.req_out.popleft())
        while self.resp_out and net.has_space(cid, RESP):
            net.reserve(cid, RESP)
            msg = self.resp_out.popleft()
            self.sim.schedule(t, net.inject, msg)
            self.system.memories[cid].credits.release()

    # response side --------------------------------------------------------

    def memory_response(self, resp: Message) -> None:
        """A response left this cluster's controller; pass it through the hub."""
        t = self.sim.now + HUB
        if resp.dst == self.cid:
            self.sim.schedule(t, self.complete, resp)
            self.system.memories[self.cid].credits.release()
            return
        net = self.system.network
        if not self.resp_out and net.has_space(self.cid, RESP):
            net.reserve(self.cid, RESP)
            self.sim.schedule(t, net.inject, resp)
            self.system.memories[self.cid].credits.release()
        else:
            self.resp_out.append(resp)

    def complete(self, resp: Message) -> None:
        """Response reached the MSHRs: wake every merged requester, free the slot."""
        now = self.sim.now
        waiters = self.mshr.retire(resp.address)
        self.completed += 1
        self.system.record_completion(resp, now)
        for requester, t in waiters:
            requester.miss_done(self.cid, resp.address, now - t)
        while self.stalled and not self.mshr.full:
            requester, address, write, created = self.stalled.popleft()
            if self.mshr.lookup(address) is not None:
                self.mshr.merge(address, requester, created)
                self.merged += 1
            else:
                self._allocate(requester, address, write, created)

    def outstanding(self) -> List[int]:
        return list(self.mshr.entries)


def default_clusters(system, n: int = NUM_CLUSTERS, mshr: int = 64) -> list:
    return [Cluster(system, c, mshr) for c in range(n)]
