"""Run statistics, interconnect power, and the optical resource inventory."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from .config import CLOCK_HZ, NUM_CLUSTERS

CYCLE_NS = 1e9 / CLOCK_HZ
HIST_BUCKET_NS = 10

XBAR_POWER_W = 26.0
PHOTONIC_TOTAL_W = 39.0  # whole photonic interconnect, informational
MESH_HOP_ENERGY_J = 196e-12
OCM_MW_PER_GBPS = 0.078
ECM_MW_PER_GBPS = 2.0
MEMORY_COEFF = {"ocm": OCM_MW_PER_GBPS, "ecm": ECM_MW_PER_GBPS}

CSV_FIELDS = ("config", "workload", "runtime_cycles", "bandwidth_GBps",
              "avg_latency_ns", "power_W")
EXTRA_FIELDS = ("requests", "memory_power_W", "seed")


@dataclass(frozen=True)
class PowerModel:
    xbar_power_w: float = XBAR_POWER_W
    mesh_energy_per_hop_j: float = MESH_HOP_ENERGY_J
    ocm_mw_per_gbps: float = OCM_MW_PER_GBPS
    ecm_mw_per_gbps: float = ECM_MW_PER_GBPS

    def __post_init__(self):
        if min(self.xbar_power_w, self.mesh_energy_per_hop_j,
               self.ocm_mw_per_gbps, self.ecm_mw_per_gbps) <= 0:
            raise ValueError("power coefficients must be positive")

    def mesh_energy(self, message_hops: int) -> float:
        """One transaction is one message, whatever its flit count."""
        return message_hops * self.mesh_energy_per_hop_j

    def xbar_energy(self, seconds: float) -> float:
        return self.xbar_power_w * seconds

    def memory_power(self, memory: str, bytes_per_s: float) -> float:
        coeff = self.ocm_mw_per_gbps if memory == "ocm" else self.ecm_mw_per_gbps
        return coeff * 1e-3 * bytes_per_s * 8 / 1e9


DEFAULT_POWER = PowerModel()


def memory_link_power(memory: str, bytes_per_s: float, model: PowerModel = DEFAULT_POWER) -> float:
    """Watts spent on the off-stack links at a given throughput."""
    return model.memory_power(memory, bytes_per_s)


def ecm_what_if(bytes_per_s: float = 10.24e12, model: PowerModel = DEFAULT_POWER) -> float:
    """Electrical memory links scaled up to optical-class bandwidth."""
    return model.memory_power("ecm", bytes_per_s)


@dataclass
class StatsReport:
    config: str
    workload: str
    network: str
    memory: str
    seed: int
    runtime_cycles: int
    requests_completed: int
    payload_bytes: int
    latency_sum_cycles: int
    latency_hist: Dict[int, int] = field(default_factory=dict)  # bucket_ns -> count
    network_energy_j: float = 0.0
    message_hops: int = 0
    network_messages: int = 0
    utilization: Dict[str, float] = field(default_factory=dict)
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def runtime_s(self) -> float:
        return self.runtime_cycles / CLOCK_HZ

    @property
    def bandwidth_bytes_per_s(self) -> float:
        return self.payload_bytes / self.runtime_s if self.runtime_cycles else 0.0

    @property
    def bandwidth_gbps(self) -> float:
        """GB/s (10^9 bytes)."""
        return self.bandwidth_bytes_per_s / 1e9

    @property
    def avg_latency_cycles(self) -> float:
        return self.latency_sum_cycles / self.requests_completed if self.requests_completed else 0.0

    @property
    def avg_latency_ns(self) -> float:
        return self.avg_latency_cycles * CYCLE_NS

    @property
    def network_power_w(self) -> float:
        return self.network_energy_j / self.runtime_s if self.runtime_cycles else 0.0

    @property
    def memory_power_w(self) -> float:
        return memory_link_power(self.memory, self.bandwidth_bytes_per_s)

    def row(self) -> dict:
        return {
            "config": self.config,
            "workload": self.workload,
            "runtime_cycles": self.runtime_cycles,
            "bandwidth_GBps": f"{self.bandwidth_gbps:.3f}",
            "avg_latency_ns": f"{self.avg_latency_ns:.3f}",
            "power_W": f"{self.network_power_w:.4f}",
            "requests": self.requests_completed,
            "memory_power_W": f"{self.memory_power_w:.4f}",
            "seed": self.seed,
        }

    def summary(self) -> str:
        lines = [
            f"{self.config} on {self.workload} (seed {self.seed})",
            f"  runtime            {self.runtime_cycles} cycles ({self.runtime_s * 1e6:.3f} us)",
            f"  requests completed {self.requests_completed}",
            f"  memory bandwidth   {self.bandwidth_gbps:.2f} GB/s",
            f"  avg L2 miss lat.   {self.avg_latency_cycles:.2f} cycles ({self.avg_latency_ns:.2f} ns)",
            f"  on-chip net power  {self.network_power_w:.3f} W ({self.network_energy_j * 1e3:.4f} mJ)",
            f"  memory link power  {self.memory_power_w:.3f} W",
        ]
        return "\n".join(lines)

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("bucket_ns", "count"))
        for bucket in sorted(self.latency_hist):
            w.writerow((bucket, self.latency_hist[bucket]))
        return buf.getvalue()


def latency_bucket(latency_cycles: int) -> int:
    return int(latency_cycles * CYCLE_NS // HIST_BUCKET_NS) * HIST_BUCKET_NS


def reports_csv(reports: Iterable[StatsReport], speedups: Optional[Sequence[float]] = None,
                extra: bool = True) -> str:
    fields = list(CSV_FIELDS) + (list(EXTRA_FIELDS) if extra else [])
    if speedups is not None:
        fields.append("speedup")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for i, rep in enumerate(reports):
        row = rep.row()
        if speedups is not None:
            row["speedup"] = f"{speedups[i]:.4f}"
        w.writerow(row)
    return buf.getvalue()


class WorkloadMismatch(ValueError):
    pass


def normalized_speedup(reports: Sequence[StatsReport], baseline: str = "LMesh/ECM") -> List[float]:
    """runtime(baseline) / runtime(config) within each workload."""
    base = {}
    counts = {}
    for r in reports:
        key = r.workload
        counts.setdefault(key, set()).add(r.requests_completed)
        if r.config == baseline:
            base[key] = r.runtime_cycles
    for wl, reqs in counts.items():
        if len(reqs) != 1:
            raise WorkloadMismatch(f"workload {wl} ran to different request counts: {sorted(reqs)}")
    out = []
    for r in reports:
        if r.workload not in base:
            raise WorkloadMismatch(f"no {baseline} run for workload {r.workload}")
        out.append(base[r.workload] / r.runtime_cycles)
    return out


def geometric_mean(values: Iterable[float]) -> float:
    vals = list(values)
    if not vals or min(vals) <= 0:
        raise ValueError("geometric mean needs positive values")
    return math.exp(sum(math.log(v) for v in vals) / len(vals))


# -- optical resource inventory -------------------------------------------

@dataclass(frozen=True)
class OpticalInventory:
    """Waveguide and ring-resonator counts per photonic subsystem."""
    memory: tuple
    crossbar: tuple
    broadcast: tuple
    arbitration: tuple
    clock: tuple

    SUBSYSTEMS = ("memory", "crossbar", "broadcast", "arbitration", "clock")

    def rows(self):
        return [(name, *getattr(self, name)) for name in self.SUBSYSTEMS]

    @property
    def total_waveguides(self) -> int:
        return sum(w for _, w, _ in self.rows())

    @property
    def total_rings(self) -> int:
        return sum(r for _, _, r in self.rows())


def optical_inventory(clusters: int = NUM_CLUSTERS, channel_wavelengths: int = 256,
                      memory_wavelengths: int = 64, channel_waveguides: int = 4) -> OpticalInventory:
    """Count waveguides and rings for the default-parameter photonic layer.

    memory:      a fiber pair per controller; each side of each link needs a
                 modulator and a detector per wavelength (2 * 2 * lambda rings)
    crossbar:    ``channel_waveguides`` per channel; every cluster carries one
                 ring per wavelength on every channel (modulators on the others,
                 detectors on its own)
    broadcast:   one coil; per cluster one modulator and one detector per
                 wavelength, the coil carrying ``memory_wavelengths`` of them
    arbitration: two waveguides; per cluster a detector and an injector per
                 channel token
    clock:       one waveguide, one ring per cluster
    """
    if min(clusters, channel_wavelengths, memory_wavelengths, channel_waveguides) <= 0:
        raise ValueError("inventory parameters must be positive")
    return OpticalInventory(
        memory=(clusters * 2, clusters * 2 * 2 * memory_wavelengths),
        crossbar=(clusters * channel_waveguides, clusters * clusters * channel_wavelengths),
        broadcast=(1, clusters * 2 * memory_wavelengths),
        arbitration=(2, clusters * 2 * clusters),
        clock=(1, clusters),
    )


def _k(n: int) -> str:
    return f"{n // 1024} K" if n >= 1024 and n % 1024 == 0 else str(n)


def inventory_table(inv: Optional[OpticalInventory] = None) -> str:
    inv = inv or optical_inventory()
    lines = [f"{'Photonic Subsystem':<20}{'Waveguides':>12}{'Ring Resonators':>18}"]
    for name, wg, rings in inv.rows():
        lines.append(f"{name.capitalize():<20}{wg:>12}{_k(rings):>18}")
    lines.append(f"{'Total':<20}{inv.total_waveguides:>12}{'~' + str(round(inv.total_rings / 1024)) + ' K':>18}")
    return "\n".join(lines)


def power_budget(model: PowerModel = DEFAULT_POWER) -> str:
    ocm_peak = 64 * 160e9
    lines = [
        f"Crossbar (continuous)          {model.xbar_power_w:8.2f} W",
        f"Photonic interconnect total    {PHOTONIC_TOTAL_W:8.2f} W (informational)",
        f"OCM links at {ocm_peak / 1e12:.2f} TB/s        {model.memory_power('ocm', ocm_peak):8.2f} W",
        f"ECM links at {ocm_peak / 1e12:.2f} TB/s (what-if) {ecm_what_if(ocm_peak, model):8.2f} W",
        f"Mesh energy per hop            {model.mesh_energy_per_hop_j * 1e12:8.1f} pJ",
    ]
    return "\n".join(lines)
