"""Deterministic simulator of a hybrid 3D radio access network: one
geostationary satellite RAT plus mobile aerial 5G NR access points serving
mobile ground users."""

from .engine import MetricsFrame, RunSummary, run
from .scenario import (
    Scenario,
    builtin_paper_scenario,
    parse_scenario,
    serialize_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "MetricsFrame",
    "RunSummary",
    "Scenario",
    "builtin_paper_scenario",
    "parse_scenario",
    "run",
    "serialize_scenario",
    "__version__",
]
