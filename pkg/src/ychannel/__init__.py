"""Optimal DoF region and signal-alignment scheme for the asymmetric three-user MIMO Y channel."""

__version__ = "0.1.0"

from .region import (  # noqa: E402
    AntennaConfig,
    DofTuple,
    build_region,
    contains,
    enumerate_vertices,
    max_weighted,
)
from .planner import classify, feasibility_report, integerize, plan  # noqa: E402
from .channel import deactivate, sample  # noqa: E402
from .transceiver import synthesize  # noqa: E402
from .simulate import estimate_rates, monte_carlo, run_noiseless  # noqa: E402

__all__ = [
    "AntennaConfig",
    "DofTuple",
    "build_region",
    "contains",
    "enumerate_vertices",
    "max_weighted",
    "integerize",
    "classify",
    "plan",
    "feasibility_report",
    "sample",
    "deactivate",
    "synthesize",
    "run_noiseless",
    "estimate_rates",
    "monte_carlo",
]
