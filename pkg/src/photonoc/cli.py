"""Command-line experiment runner.

Precedence, lowest to highest: built-in defaults, ``--config`` file, command
line flags, and (for sweeps) the per-line keys of the matrix file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .config import BASELINE, NETWORKS, MEMORIES, ConfigError, SimConfig, load_config, load_matrix
from .kernel import DeadlockError
from .metrics import (WorkloadMismatch, geometric_mean, inventory_table, normalized_speedup,
                      power_budget, reports_csv)
from .system import BarrierError, run
from .traffic import TraceError

EXIT_OK, EXIT_CONFIG, EXIT_DEADLOCK = 0, 1, 2

log = logging.getLogger("photonoc")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="photonoc", description=__doc__.splitlines()[0])
    p.add_argument("--network", choices=NETWORKS)
    p.add_argument("--memory", choices=MEMORIES)
    p.add_argument("--workload", help="uniform|hotspot|tornado|transpose|bursty|broadcast|trace:<path>")
    p.add_argument("--requests", type=int, help="network requests to complete (synthetic)")
    p.add_argument("--seed", type=int)
    p.add_argument("--mshr", type=int)
    p.add_argument("--hub-queue", type=int)
    p.add_argument("--mem-queue", type=int)
    p.add_argument("--mesh-buffer", type=int)
    p.add_argument("--hot-cluster", type=int)
    p.add_argument("--barrier-mode", choices=("ideal", "bus"))
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--hist", help="write the latency histogram CSV here")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--sweep", help="matrix file, one 'key=value ...' config per line")
    p.add_argument("--multi-workload", action="store_true",
                   help="allow a sweep to mix workloads (adds geometric-mean rows)")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs in a sweep")
    p.add_argument("--inventory", action="store_true",
                   help="print the optical resource inventory and power budget, then exit")
    p.add_argument("-q", "--quiet", action="store_true", help="no text summary on stderr")
    return p


_OVERRIDE_KEYS = ("network", "memory", "workload", "requests", "seed", "mshr", "hub_queue",
                  "mem_queue", "mesh_buffer", "hot_cluster", "barrier_mode")


def config_from_args(args) -> SimConfig:
    flags = {k: getattr(args, k) for k in _OVERRIDE_KEYS if getattr(args, k) is not None}
    if args.config:
        return load_config(args.config, **flags)
    return SimConfig(**flags)


def sweep(configs: Sequence[SimConfig], multi_workload: bool = False, jobs: int = 1):
    """Run every config; returns (reports, speedups, geomean rows).

    Speedups are normalised per workload to LMesh/ECM, or to the first
    config of the matrix when LMesh/ECM is not part of it.
    """
    configs = list(configs)
    if not configs:
        raise ConfigError("empty sweep matrix")
    workloads = {c.workload for c in configs}
    if len(workloads) > 1 and not multi_workload:
        raise ConfigError(f"sweep mixes workloads {sorted(workloads)}; pass --multi-workload")
    if len({c.requests for c in configs}) > 1:
        raise ConfigError("sweep configs must share the request target")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run, configs))  # map keeps config order
    else:
        reports = [run(c) for c in configs]
    baseline = SimConfig(network=BASELINE[0], memory=BASELINE[1]).name
    names = {r.config for r in reports}
    if baseline not in names:
        baseline = reports[0].config
    speedups = normalized_speedup(reports, baseline)
    geo = []
    if len(workloads) > 1:
        for name in dict.fromkeys(r.config for r in reports):
            vals = [s for r, s in zip(reports, speedups) if r.config == name]
            geo.append((name, geometric_mean(vals)))
    return reports, speedups, geo


def sweep_csv(reports, speedups, geo) -> str:
    text = reports_csv(reports, speedups)
    if geo:
        ncols = text.splitlines()[0].count(",")
        for name, g in geo:
            cells = [name, "geomean"] + [""] * (ncols - 2) + [f"{g:.4f}"]
            text += ",".join(cells) + "\n"
    return text


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.inventory:
        print(inventory_table())
        print()
        print(power_budget())
        return EXIT_OK
    try:
        base = config_from_args(args)
        if args.sweep:
            configs = load_matrix(args.sweep, base)
            reports, speedups, geo = sweep(configs, args.multi_workload, args.jobs)
            _emit(sweep_csv(reports, speedups, geo), args.out)
            if not args.quiet:
                for r in reports:
                    print(r.summary(), file=sys.stderr)
            return EXIT_OK
        report = run(base)
    except (ConfigError, TraceError, BarrierError, WorkloadMismatch) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DeadlockError as e:
        print(f"simulation deadlock: {e}", file=sys.stderr)
        return EXIT_DEADLOCK
    _emit(reports_csv([report]), args.out)
    if args.hist:
        Path(args.hist).write_text(report.histogram_csv())
    if not args.quiet:
        print(report.summary(), file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
