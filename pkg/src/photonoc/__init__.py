"""Cycle-level simulator of a nanophotonic many-core interconnect and memory system."""

from .config import SimConfig
from .metrics import StatsReport, optical_inventory
from .system import run

__all__ = ["SimConfig", "StatsReport", "optical_inventory", "run"]
__version__ = "0.1.0"
