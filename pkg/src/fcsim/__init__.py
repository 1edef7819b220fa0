"""Grid-connected DC fast-charging station simulator and corridor planner.

The power chain (11 kV grid, step-down transformer, Vienna rectifier, LC
filter, DC load) is integrated with a fixed-step kernel; ``BACKEND`` names
the kernel in use: the compiled extension when it was built, otherwise the
pure-Python twin.
"""

__version__ = "0.1.0"

from ._backend import AVAILABLE as AVAILABLE_BACKENDS
from ._backend import DEFAULT as BACKEND
from .scenario import Scenario, baseline, load_scenario
from .station import SimulationResult, simulate

__all__ = [
    "AVAILABLE_BACKENDS", "BACKEND", "Scenario", "SimulationResult",
    "baseline", "load_scenario", "simulate",
]
