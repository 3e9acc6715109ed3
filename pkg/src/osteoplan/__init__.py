"""
osteoplan - planning, jig placement and cut-error simulation for pelvic tumor resection.

Plans four margin planes around a spherical tumor model, places a staged
modular cutting jig on them, simulates freehand and navigated cuts and
evaluates the achieved margins against the plan.
"""

from osteoplan.core import (
    BaseWorkflow,
    Finding,
    LogManager,
    OsteoplanError,
    RunContext,
    RunPaths,
    TimedLogger,
    TimingCollector,
    __version__,
    timed_execution,
)

__all__ = [
    "BaseWorkflow",
    "Finding",
    "LogManager",
    "OsteoplanError",
    "RunContext",
    "RunPaths",
    "__version__",
    "TimedLogger",
    "TimingCollector",
    "timed_execution",
]
