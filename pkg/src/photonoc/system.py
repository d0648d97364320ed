"""Assemble one network/memory configuration and drive a workload through it."""

from __future__ import annotations

import logging
import random
from collections import Counter
from typing import Dict, List, Optional

from .arbitration import TokenRing
from .broadcast import BroadcastBus
from .cluster import HUB, Cluster
from .config import (NUM_CLUSTERS, SYNTHETIC_WORKLOADS, THREADS_PER_CLUSTER,
                     ConfigError, SimConfig)
from .emesh import HMESH_WIDTH, LMESH_WIDTH, Mesh
from .kernel import PHASES_PER_CYCLE, SimulationError, Simulator
from .memory import LINK_SPECS, MemoryController
from .message import BCAST, Message
from .metrics import DEFAULT_POWER, StatsReport, latency_bucket
from .traffic import (BARRIER, WRITE, SyntheticPattern, TraceRecord, bursty_trace,
                      group_by_thread, home_cluster, line_address, read_trace,
                      synth_destination)
from .xbar import Crossbar

log = logging.getLogger(__name__)

BROADCAST_CHANNEL = NUM_CLUSTERS


class BarrierError(SimulationError):
    pass


class System:
    """Clusters, memory controllers and one on-stack network sharing a kernel."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.n = NUM_CLUSTERS
        self.sim = Simulator()
        self.ring = TokenRing(self.sim, self.n)
        self.bus = BroadcastBus(self.sim, self.ring, BROADCAST_CHANNEL, self.n)
        spec = LINK_SPECS[config.memory]
        self.memories = [MemoryController(self.sim, c, spec, config.mem_queue, self._memory_emit)
                         for c in range(self.n)]
        if config.network == "xbar":
            self.network = Crossbar(self.sim, self.ring, self.n, config.hub_queue, self._deliver)
        else:
            width = HMESH_WIDTH if config.network == "hmesh" else LMESH_WIDTH
            self.network = Mesh(self.sim, width, self.n, buffer_depth=config.mesh_buffer,
                                queue_depth=config.hub_queue, deliver=self._deliver)
        self.network.on_space = self._on_space
        self.clusters = [Cluster(self, c, config.mshr) for c in range(self.n)]
        self.requests_in_flight = 0
        self.completed = 0
        self.latency_sum = 0
        self.hist: Counter = Counter()
        self.last_completion = 0
        self.target: Optional[int] = None
        self.driver = None

    # plumbing between components ----------------------------------------

    def _on_space(self, src: int) -> None:
        self.clusters[src].on_space()

    def _deliver(self, msg: Message) -> None:
        """Message arrived at its destination cluster's network interface."""
        t = self.sim.now + HUB
        if msg.is_request:
            self.sim.schedule(t, self.memories[msg.dst].access, msg)
        else:
            self.sim.schedule(t, self.clusters[msg.dst].complete, msg)

    def _memory_emit(self, req: Message) -> None:
        self.clusters[req.dst].memory_response(req.response(self.sim.now))

    def record_completion(self, resp: Message, now: int) -> None:
        lat = (now - resp.created) // PHASES_PER_CYCLE
        self.requests_in_flight -= 1
        self.completed += 1
        self.latency_sum += lat
        self.hist[latency_bucket(lat)] += 1
        self.last_completion = now
        if self.target is not None and self.completed >= self.target:
            self.sim.stop()

    def outstanding(self) -> Optional[str]:
        stuck = [(c.cid, len(c.mshr), len(c.stalled)) for c in self.clusters
                 if len(c.mshr) or c.stalled]
        extra = self.driver.pending() if self.driver is not None else None
        if not stuck and not extra:
            return None
        parts = []
        if stuck:
            parts.append("clusters with outstanding misses (id, mshr, stalled): "
                         + ", ".join(map(str, stuck[:16])))
        if extra:
            parts.append(extra)
        return "; ".join(parts)

    # running --------------------------------------------------------------

    def run(self) -> StatsReport:
        cfg = self.config
        if cfg.workload in SYNTHETIC_WORKLOADS:
            self.driver = SyntheticDriver(self, SyntheticPattern(
                cfg.workload, request_target=cfg.requests, seed=cfg.seed,
                hot_cluster=cfg.hot_cluster))
            self.target = cfg.requests
        elif cfg.workload == "broadcast":
            self.driver = BroadcastDriver(self, cfg.requests)
        else:
            if cfg.workload == "bursty":
                records = bursty_trace(seed=cfg.seed)
            else:
                try:
                    records = read_trace(cfg.trace_path)
                except OSError as e:
                    raise ConfigError(f"cannot read trace {cfg.trace_path}: {e}") from None
            return self.run_records(records)
        self.driver.start()
        self.sim.run(outstanding=self.outstanding)
        return self.report()

    def run_records(self, records: List[TraceRecord]) -> StatsReport:
        """Replay in-memory trace records with blocking threads."""
        self.driver = TraceDriver(self, records, bus_barriers=self.config.barrier_mode == "bus")
        self.driver.start()
        self.sim.run(outstanding=self.outstanding)
        return self.report()

    def report(self) -> StatsReport:
        cfg = self.config
        end = self.last_completion
        if isinstance(self.driver, BroadcastDriver):
            end = self.driver.last_time
        runtime = end // PHASES_PER_CYCLE
        payload = sum(m.payload_bytes for m in self.memories)
        seconds = runtime / 5e9
        net = self.network
        energy = net.energy_joules(seconds)
        if isinstance(net, Crossbar):
            util = {f"channel{c}": u for c, u in enumerate(net.utilization(end))}
            hops = 0
        else:
            util = {f"{r}{p}": u for (r, p), u in net.link_utilization(end).items()}
            hops = net.message_hops
        completed, lat_sum, hist = self.completed, self.latency_sum, dict(self.hist)
        if isinstance(self.driver, BroadcastDriver):
            completed, lat_sum, hist = self.driver.completed, self.driver.latency_sum, dict(self.driver.hist)
        return StatsReport(
            config=cfg.name, workload=cfg.workload, network=cfg.network, memory=cfg.memory,
            seed=cfg.seed, runtime_cycles=runtime, requests_completed=completed,
            payload_bytes=payload, latency_sum_cycles=lat_sum,
            latency_hist=dict(sorted(hist.items())), network_energy_j=energy,
            message_hops=hops, network_messages=net.messages, utilization=util,
            extra={"events": self.sim.executed,
                   "mshr_merges": sum(c.merged for c in self.clusters)})


class SyntheticDriver:
    """Closed loop: every cluster keeps its MSHRs full, issuing one miss per cycle."""

    def __init__(self, system: System, pattern: SyntheticPattern):
        self.system = system
        self.sim = system.sim
        self.pattern = pattern
        self.issued = 0
        self.rngs = [random.Random(pattern.seed * 1_000_003 + c) for c in range(system.n)]
        self.lines = [0] * system.n
        self.next_issue = [0] * system.n
        self.armed = [False] * system.n

    def start(self) -> None:
        for c in range(self.system.n):
            self._arm(c)

    def pending(self) -> Optional[str]:
        if self.issued < self.pattern.request_target:
            return f"{self.pattern.request_target - self.issued} synthetic requests never issued"
        return None

    def _arm(self, c: int) -> None:
        if self.armed[c] or self.issued >= self.pattern.request_target:
            return
        self.armed[c] = True
        t = max(self.sim.now, self.next_issue[c])
        self.sim.schedule(t, self._issue, c)

    def _issue(self, c: int) -> None:
        self.armed[c] = False
        cluster = self.system.clusters[c]
        if self.issued >= self.pattern.request_target or cluster.mshr.full:
            return
        dst = synth_destination(self.pattern, c, self.rngs[c])
        addr = line_address(self.lines[c], dst, self.system.n)
        self.lines[c] += 1
        self.issued += 1
        cluster.accept_miss(self, addr)
        self.next_issue[c] = self.sim.now + PHASES_PER_CYCLE
        if not cluster.mshr.full:
            self._arm(c)

    def miss_done(self, cid: int, address: int, latency: int) -> None:
        self._arm(cid)


class Thread:
    __slots__ = ("tid", "records", "idx", "cluster", "waiting_barrier", "driver")

    def __init__(self, tid, records, cluster, driver):
        self.tid = tid
        self.records = records
        self.idx = 0
        self.cluster = cluster
        self.waiting_barrier = None
        self.driver = driver

    def miss_done(self, cid: int, address: int, latency: int) -> None:
        self.idx += 1
        self.driver._next(self, self.driver.sim.now)


class TraceDriver:
    """Blocking replay of per-thread miss traces on in-order threads.

    A thread issues a record ``gap`` cycles after its previous miss returned
    (or its previous barrier released).  Barriers hold a thread until every
    thread in the trace has arrived at the same barrier id.
    """

    def __init__(self, system: System, records: List[TraceRecord], bus_barriers: bool = False):
        self.system = system
        self.sim = system.sim
        per_thread = group_by_thread(records)
        self.threads: Dict[int, Thread] = {
            tid: Thread(tid, recs, home_cluster(tid), self) for tid, recs in per_thread.items()}
        self.bus_barriers = bus_barriers
        self.barrier_id: Optional[int] = None
        self.arrived: List[Thread] = []
        self.finished = 0
        self.barriers_released = 0
        self.release_log: List[tuple] = []
        self.issue_log: Optional[list] = None  # (tid, time) when tracing
        if bus_barriers:
            system.bus.receive = self._bus_receive

    def start(self) -> None:
        for th in self.threads.values():
            self._next(th, 0)

    def pending(self) -> Optional[str]:
        waiting = [t.tid for t in self.threads.values()
                   if t.idx < len(t.records)]
        if not waiting:
            return None
        return f"{len(waiting)} threads unfinished (e.g. {waiting[:8]}), barrier {self.barrier_id} has {len(self.arrived)} arrivals"

    def _next(self, th: Thread, base: int) -> None:
        if th.idx >= len(th.records):
            self.finished += 1
            self._check_barrier_reachable()
            return
        rec = th.records[th.idx]
        self.sim.schedule(base + rec.gap * PHASES_PER_CYCLE, self._execute, th)

    def _execute(self, th: Thread) -> None:
        rec = th.records[th.idx]
        if rec.kind == BARRIER:
            self._arrive(th, rec.barrier_id)
            return
        if self.issue_log is not None:
            self.issue_log.append((th.tid, self.sim.now))
        self.system.clusters[th.cluster].accept_miss(th, rec.address, rec.kind == WRITE)

    def _arrive(self, th: Thread, bid: int) -> None:
        if self.barrier_id is None:
            self.barrier_id = bid
        elif bid != self.barrier_id:
            raise BarrierError(f"thread {th.tid} reached barrier {bid} while barrier "
                               f"{self.barrier_id} is pending")
        th.waiting_barrier = bid
        self.arrived.append(th)
        if len(self.arrived) == len(self.threads):
            self._release_barrier(th.cluster)
        else:
            self._check_barrier_reachable()

    def _check_barrier_reachable(self) -> None:
        if self.arrived and len(self.arrived) + self.finished >= len(self.threads):
            raise BarrierError(f"barrier {self.barrier_id} can never complete: "
                               f"{self.finished} threads already finished")

    def _release_barrier(self, last_cluster: int) -> None:
        bid = self.barrier_id
        self.barriers_released += 1
        if self.bus_barriers:
            msg = Message(BCAST, last_cluster, last_cluster, created=self.sim.now, payload=("barrier", bid))
            self.system.bus.submit(msg)
            return
        self.release_log.append((bid, self.sim.now))
        threads, self.arrived, self.barrier_id = self.arrived, [], None
        for th in threads:
            th.waiting_barrier = None
            th.idx += 1
            self._next(th, self.sim.now)

    def _bus_receive(self, cluster: int, msg: Message) -> None:
        kind, bid = msg.payload
        self.release_log.append((bid, self.sim.now, cluster))
        mine = [th for th in self.arrived if th.cluster == cluster and th.waiting_barrier == bid]
        if not mine:
            return
        self.arrived = [th for th in self.arrived if not (th.cluster == cluster and th.waiting_barrier == bid)]
        if not self.arrived:
            self.barrier_id = None
        for th in mine:
            th.waiting_barrier = None
            th.idx += 1
            self._next(th, self.sim.now)


class BroadcastDriver:
    """Every cluster keeps one broadcast in flight until ``target`` are sent."""

    def __init__(self, system: System, target: int):
        self.system = system
        self.sim = system.sim
        self.target = target
        self.sent = 0
        self.completed = 0
        self.latency_sum = 0
        self.hist: Counter = Counter()
        self.last_time = 0
        self._seen: Dict[int, int] = {}
        system.bus.receive = self._receive

    def start(self) -> None:
        for c in range(self.system.n):
            self._send(c)

    def pending(self) -> Optional[str]:
        if self.completed < self.sent or self.sent < self.target:
            return f"{self.sent - self.completed} broadcasts undelivered"
        return None

    def _send(self, c: int) -> None:
        if self.sent >= self.target:
            return
        self.sent += 1
        msg = Message(BCAST, c, c, created=self.sim.now, payload=self.sent)
        self.system.bus.submit(msg)

    def _receive(self, cluster: int, msg: Message) -> None:
        seen = self._seen.get(msg.payload, 0) + 1
        if seen < self.system.n:
            self._seen[msg.payload] = seen
            return
        del self._seen[msg.payload]
        lat = (self.sim.now - msg.created) // PHASES_PER_CYCLE
        self.completed += 1
        self.latency_sum += lat
        self.hist[latency_bucket(lat)] += 1
        self.last_time = self.sim.now
        self._send(msg.src)


def build(config: SimConfig) -> System:
    return System(config)


def run(config: SimConfig) -> StatsReport:
    """Simulate ``config`` to completion and return its report."""
    return System(config).run()
