"""Workloads: synthetic destination patterns and per-thread miss traces.

Trace text format, one record per line::

    T<tid> R|W 0x<hex address> +<gap>     # read / write miss
    T<tid> B <barrier id> +<gap>          # barrier
    # comment

``gap`` is compute time in cycles since the thread's previous record.
Files ending in ``.gz`` (or starting with the gzip magic) are decompressed.
"""

from __future__ import annotations

import gzip
import io
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from .config import GRID_RADIX, LINE_BYTES, NUM_CLUSTERS, NUM_THREADS, THREADS_PER_CLUSTER

READ = "read-miss"
WRITE = "write-miss"
BARRIER = "barrier"
_KIND_TAGS = {"R": READ, "W": WRITE, "B": BARRIER}

UNIFORM, HOTSPOT, TORNADO, TRANSPOSE = "uniform", "hotspot", "tornado", "transpose"
PATTERNS = (UNIFORM, HOTSPOT, TORNADO, TRANSPOSE)


class TraceError(ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {reason}: {line.strip()!r}")


@dataclass(frozen=True)
class TraceRecord:
    thread_id: int
    gap: int
    kind: str
    address: int = 0
    barrier_id: int = 0

    @property
    def is_miss(self) -> bool:
        return self.kind != BARRIER

    def format(self) -> str:
        if self.kind == BARRIER:
            return f"T{self.thread_id} B {self.barrier_id} +{self.gap}"
        tag = "R" if self.kind == READ else "W"
        return f"T{self.thread_id} {tag} 0x{self.address:016X} +{self.gap}"


def home_cluster(thread_id: int) -> int:
    return thread_id // THREADS_PER_CLUSTER


def _parse_line(lineno: int, line: str) -> Optional[TraceRecord]:
    text = line.split("#", 1)[0].strip()
    if not text:
        return None
    parts = text.split()
    if len(parts) != 4:
        raise TraceError(lineno, line, "expected 4 fields")
    tid_s, tag, arg, gap_s = parts
    if not tid_s.startswith("T") or not tid_s[1:].isdigit():
        raise TraceError(lineno, line, "bad thread id")
    tid = int(tid_s[1:])
    if tid >= NUM_THREADS:
        raise TraceError(lineno, line, f"thread id {tid} >= {NUM_THREADS}")
    kind = _KIND_TAGS.get(tag)
    if kind is None:
        raise TraceError(lineno, line, f"unknown record kind {tag!r}")
    if not gap_s.startswith("+") or not gap_s[1:].isdigit():
        raise TraceError(lineno, line, "gap must look like +<cycles>")
    gap = int(gap_s[1:])
    if kind == BARRIER:
        if not arg.isdigit():
            raise TraceError(lineno, line, "bad barrier id")
        return TraceRecord(tid, gap, kind, barrier_id=int(arg))
    if not arg.lower().startswith("0x"):
        raise TraceError(lineno, line, "address must be hex with 0x prefix")
    try:
        addr = int(arg, 16)
    except ValueError:
        raise TraceError(lineno, line, "bad hex address") from None
    if addr >= 1 << 64:
        raise TraceError(lineno, line, "address wider than 64 bits")
    if addr % LINE_BYTES:
        raise TraceError(lineno, line, f"address not {LINE_BYTES} B aligned")
    return TraceRecord(tid, gap, kind, address=addr)


def parse_trace(data: Union[bytes, str, Iterable[str]]) -> List[TraceRecord]:
    """Parse trace text (or gzip bytes) into records in file order.

    Per-thread order is the file order of that thread's lines.
    """
    if isinstance(data, bytes):
        if data[:2] == b"\x1f\x8b":
            data = gzip.decompress(data)
        data = data.decode("ascii", errors="strict")
    lines = data.splitlines() if isinstance(data, str) else data
    out = []
    for lineno, line in enumerate(lines, 1):
        rec = _parse_line(lineno, line)
        if rec is not None:
            out.append(rec)
    return out


def read_trace(path) -> List[TraceRecord]:
    return parse_trace(Path(path).read_bytes())


def group_by_thread(records: Iterable[TraceRecord]) -> Dict[int, List[TraceRecord]]:
    threads: Dict[int, List[TraceRecord]] = {}
    for rec in records:
        threads.setdefault(rec.thread_id, []).append(rec)
    return dict(sorted(threads.items()))


def write_trace(records: Iterable[TraceRecord], path) -> None:
    text = "".join(r.format() + "\n" for r in records)
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "wt") as fh:
            fh.write(text)
    else:
        path.write_text(text)


@dataclass(frozen=True)
class SyntheticPattern:
    kind: str = UNIFORM
    radix: int = GRID_RADIX
    request_target: int = 1_000_000
    seed: int = 1
    hot_cluster: int = 0

    def __post_init__(self):
        if self.kind not in PATTERNS:
            raise ValueError(f"unknown pattern {self.kind!r}")

    @property
    def clusters(self) -> int:
        return self.radix * self.radix


def synth_destination(pattern: SyntheticPattern, src: int, rng: random.Random) -> int:
    k = pattern.radix
    if not 0 <= src < k * k:
        raise ValueError(f"cluster {src} outside the {k}x{k} grid")
    kind = pattern.kind
    if kind == UNIFORM:
        return rng.randrange(k * k)
    if kind == HOTSPOT:
        return pattern.hot_cluster
    i, j = divmod(src, k)
    if kind == TORNADO:
        shift = k // 2 - 1
        return ((i + shift) % k) * k + (j + shift) % k
    return j * k + i  # transpose


def line_address(line_index: int, controller: int, clusters: int = NUM_CLUSTERS) -> int:
    """Byte address of the ``line_index``-th line homed at ``controller``."""
    return (line_index * clusters + controller) * LINE_BYTES


def controller_of(address: int, clusters: int = NUM_CLUSTERS) -> int:
    return (address // LINE_BYTES) % clusters


def bursty_trace(phases: int = 4, lines_per_thread: int = 2, compute_gap: int = 20_000,
                 threads: int = NUM_THREADS, seed: int = 1) -> List[TraceRecord]:
    """Barrier-separated bursts where every thread reads the same remote block.

    Each phase: compute for ``compute_gap`` cycles, meet at a barrier, then
    read ``lines_per_thread`` lines of one block homed at a single
    controller.  The threads of one cluster read different lines of the
    block, so each cluster sends ``16 * lines_per_thread`` requests to that
    controller at nearly the same moment while average bandwidth stays low.
    """
    rng = random.Random(seed)
    homes = rng.sample(range(NUM_CLUSTERS), min(phases, NUM_CLUSTERS))
    homes = [homes[p % len(homes)] for p in range(phases)]
    block = THREADS_PER_CLUSTER * lines_per_thread
    recs = []
    for tid in range(threads):
        lane = tid % THREADS_PER_CLUSTER
        for p, home in enumerate(homes):
            recs.append(TraceRecord(tid, compute_gap, BARRIER, barrier_id=p))
            for r in range(lines_per_thread):
                idx = p * block + lane * lines_per_thread + r
                recs.append(TraceRecord(tid, 0, READ, address=line_address(idx, home)))
    return recs
