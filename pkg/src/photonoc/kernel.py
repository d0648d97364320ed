"""Deterministic discrete-event engine.

Simulated time is an integer count of *phases*; eight phases make one
5 GHz core clock cycle.  Optical components move one cluster position per
phase, electrical components only ever schedule on whole cycles.
"""

from __future__ import annotations

import heapq
from typing import Callable, NamedTuple, Optional

PHASES_PER_CYCLE = 8


class SimulationError(RuntimeError):
    """Fatal logic error inside the model (broken precondition)."""


class DeadlockError(SimulationError):
    """The event queue drained while work was still outstanding."""

    def __init__(self, time: int, report: str):
        self.time = time
        self.report = report
        super().__init__(f"deadlock at cycle {time / PHASES_PER_CYCLE:g}: {report}")


class SimTime(NamedTuple):
    cycles: int
    phase: int

    @classmethod
    def from_phases(cls, t: int) -> "SimTime":
        return cls(*divmod(t, PHASES_PER_CYCLE))

    def to_phases(self) -> int:
        return self.cycles * PHASES_PER_CYCLE + self.phase


def cycles(n: int) -> int:
    """Phase count of ``n`` whole cycles."""
    return n * PHASES_PER_CYCLE


def ceil_cycle(t: int) -> int:
    """Round a phase time up to the next cycle boundary (in phases)."""
    return -(-t // PHASES_PER_CYCLE) * PHASES_PER_CYCLE


class Simulator:
    """Priority-queue event engine keyed on ``(fire_time, sequence)``.

    Events are plain callables with positional arguments.  Ties on time are
    broken by the global issue sequence so a run is fully reproducible.
    """

    def __init__(self):
        self.now = 0
        self._queue: list = []
        self._seq = 0
        self._stop = False
        self.executed = 0
        # optional hook(time, seq) called before each dispatch; used by tests
        self.audit: Optional[Callable[[int, int], None]] = None

    def __len__(self):
        return len(self._queue)

    def schedule(self, time: int, fn: Callable, *args) -> int:
        if time < self.now:
            raise SimulationError(
                f"event {getattr(fn, '__qualname__', fn)} scheduled at {time} "
                f"which is before now={self.now}")
        seq = self._seq
        self._seq = seq + 1
        heapq.heappush(self._queue, (time, seq, fn, args))
        return seq

    def after(self, delay: int, fn: Callable, *args) -> int:
        return self.schedule(self.now + delay, fn, *args)

    def stop(self) -> None:
        """Ask :meth:`run` to return after the current event."""
        self._stop = True

    def run(self, until: Optional[int] = None,
            outstanding: Optional[Callable[[], Optional[str]]] = None) -> int:
        """Dispatch events until the time limit or a :meth:`stop` request.

        ``outstanding`` returns a description of unfinished work (or None);
        if the queue drains while it reports something, the run is stuck and
        :class:`DeadlockError` is raised.
        """
        queue = self._queue
        pop = heapq.heappop
        audit = self.audit
        self._stop = False
        while queue:
            if until is not None and queue[0][0] > until:
                break
            time, seq, fn, args = pop(queue)
            if audit is not None:
                audit(time, seq)
            self.now = time
            fn(*args)
            self.executed += 1
            if self._stop:
                return self.now
        else:
            if outstanding is not None:
                pending = outstanding()
                if pending:
                    raise DeadlockError(self.now, pending)
        if until is not None and until > self.now:
            self.now = until
        return self.now
