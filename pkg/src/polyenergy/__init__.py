"""Symbolic energy and latency analysis of loop programs tiled onto
processor arrays."""

from .analysis import Analysis, CompiledReport, analyze
from .dsl import parse_pra
from .energy import EnergyTable, load_energy_table
from .mapping import MappingConfig, load_mapping
from .sim import compare, execute, simulate

__all__ = [
    "Analysis",
    "CompiledReport",
    "EnergyTable",
    "MappingConfig",
    "analyze",
    "compare",
    "execute",
    "load_energy_table",
    "load_mapping",
    "parse_pra",
    "simulate",
]
