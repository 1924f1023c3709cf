"""Fast marching minimum-cost paths with floating-point precision audits."""

from .backtrace import Path, extract_path, path_cost, run_pipeline
from .errors import FmmlabError
from .fmm import ArrivalField, solve
from .grid import CostGrid, GridGeometry, Scenario, generate_scenario, load_scenario, write_scenario
from .scalar import PLAIN, PlainMode, RandomRoundMode, RngStream, StochasticMode

__version__ = "0.1.0"

__all__ = [
    "ArrivalField", "CostGrid", "FmmlabError", "GridGeometry", "PLAIN", "Path", "PlainMode",
    "RandomRoundMode", "RngStream", "Scenario", "StochasticMode", "extract_path",
    "generate_scenario", "load_scenario", "path_cost", "run_pipeline", "solve", "write_scenario",
]
