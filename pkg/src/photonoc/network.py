"""Behaviour shared by the on-stack networks: per-cluster injection queues."""

from __future__ import annotations

from typing import Callable, List, Optional

from .kernel import SimulationError, Simulator
from .message import Message

REQ = 0
RESP = 1


def msg_class(msg: Message) -> int:
    return REQ if msg.is_request else RESP


class Network:
    """Base class.  Each cluster has one bounded send queue per message class.

    The hub reserves a slot with :meth:`reserve` when it starts a pass and
    hands the message over with :meth:`inject` one cycle later.  When a slot
    frees, ``on_space(cluster)`` is called.
    """

    kind = "abstract"

    def __init__(self, sim: Simulator, n: int, queue_depth: int,
                 deliver: Optional[Callable[[Message], None]] = None):
        self.sim = sim
        self.n = n
        self.queue_depth = queue_depth
        self.deliver = deliver
        self.on_space: Optional[Callable[[int], None]] = None
        self.occupancy: List[List[int]] = [[0, 0] for _ in range(n)]
        self.messages = 0
        self.in_flight = 0

    def has_space(self, src: int, cls: int) -> bool:
        return self.occupancy[src][cls] < self.queue_depth

    def reserve(self, src: int, cls: int) -> None:
        occ = self.occupancy[src]
        if occ[cls] >= self.queue_depth:
            raise SimulationError(f"send queue overflow at cluster {src}")
        occ[cls] += 1

    def _free_slot(self, src: int, cls: int) -> None:
        self.occupancy[src][cls] -= 1
        if self.on_space is not None:
            self.on_space(src)

    def inject(self, msg: Message) -> None:
        raise NotImplementedError

    def _delivered(self, msg: Message) -> None:
        self.in_flight -= 1
        if self.deliver is not None:
            self.deliver(msg)

    def energy_joules(self, runtime_s: float) -> float:
        raise NotImplementedError
