"""System constants and the experiment description."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

CLOCK_HZ = 5_000_000_000
NUM_CLUSTERS = 64
GRID_RADIX = 8
CORES_PER_CLUSTER = 4
THREADS_PER_CORE = 4
THREADS_PER_CLUSTER = CORES_PER_CLUSTER * THREADS_PER_CORE
NUM_THREADS = NUM_CLUSTERS * THREADS_PER_CLUSTER
LINE_BYTES = 64
HEADER_BYTES = 8

NETWORKS = ("xbar", "hmesh", "lmesh")
MEMORIES = ("ocm", "ecm")
SYNTHETIC_WORKLOADS = ("uniform", "hotspot", "tornado", "transpose")
BUILTIN_WORKLOADS = SYNTHETIC_WORKLOADS + ("bursty", "broadcast")
BARRIER_MODES = ("ideal", "bus")

# the five network/memory pairings evaluated, baseline last
PAPER_CONFIGS = (("xbar", "ocm"), ("hmesh", "ocm"), ("lmesh", "ocm"),
                 ("hmesh", "ecm"), ("lmesh", "ecm"))
BASELINE = ("lmesh", "ecm")


_NET_LABELS = {"xbar": "XBar", "hmesh": "HMesh", "lmesh": "LMesh"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    network: str = "xbar"
    memory: str = "ocm"
    workload: str = "uniform"
    requests: int = 1_000_000
    seed: int = 1
    mshr: int = 64
    hub_queue: int = 16
    mem_queue: int = 64
    mesh_buffer: int = 16
    hot_cluster: int = 0
    barrier_mode: str = "ideal"

    def __post_init__(self):
        self.validate()

    @property
    def name(self) -> str:
        return f"{_NET_LABELS[self.network]}/{self.memory.upper()}"

    @property
    def trace_path(self) -> Optional[Path]:
        if self.workload.startswith("trace:"):
            return Path(self.workload[len("trace:"):])
        return None

    def validate(self) -> None:
        if self.network not in NETWORKS:
            raise ConfigError(f"unknown network {self.network!r}; expected one of {NETWORKS}")
        if self.memory not in MEMORIES:
            raise ConfigError(f"unknown memory {self.memory!r}; expected one of {MEMORIES}")
        if self.trace_path is None and self.workload not in BUILTIN_WORKLOADS:
            raise ConfigError(f"unknown workload {self.workload!r}")
        if self.trace_path is not None and not str(self.trace_path):
            raise ConfigError("empty trace path")
        if self.barrier_mode not in BARRIER_MODES:
            raise ConfigError(f"unknown barrier mode {self.barrier_mode!r}")
        for key in ("requests", "mshr", "hub_queue", "mem_queue", "mesh_buffer"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be positive")
        if not 0 <= self.hot_cluster < NUM_CLUSTERS:
            raise ConfigError(f"hot_cluster must be in 0..{NUM_CLUSTERS - 1}")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SimConfig)}


def coerce(key: str, value: str):
    key = key.strip().replace("-", "_")
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    if _FIELD_TYPES[key] == "int":
        try:
            return key, int(value.replace("_", ""), 0)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    return key, value.strip()


def parse_kv_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key, value = coerce(key, value)
        out[key] = value
    return out


def parse_matrix_line(line: str) -> dict:
    """One sweep entry: whitespace separated ``key=value`` tokens."""
    out = {}
    for tok in line.split():
        if "=" not in tok:
            raise ConfigError(f"bad sweep token {tok!r}")
        key, value = coerce(*tok.split("=", 1))
        out[key] = value
    return out


def load_config(path, base: Optional[SimConfig] = None, **overrides) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    fields = parse_kv_text(text)
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return (base or SimConfig()).replace(**fields)


def load_matrix(path, base: Optional[SimConfig] = None) -> list:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read sweep matrix {path}: {e}") from None
    base = base or SimConfig()
    configs = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            configs.append(base.replace(**parse_matrix_line(line)))
    return configs
