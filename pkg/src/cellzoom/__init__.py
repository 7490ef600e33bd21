"""Privacy-masked cell zooming for off-grid small-cell base stations."""

from .model import SbsState, SimParams, coverage_coefficient
from .scenario import Scenario, random_scenario, table2_scenario
from .harness import SimTrace, run_simulation

__version__ = "0.1.0"

__all__ = [
    "SbsState",
    "Scenario",
    "SimParams",
    "SimTrace",
    "coverage_coefficient",
    "random_scenario",
    "run_simulation",
    "table2_scenario",
]
