"""Core runtime pieces: errors, findings, logging, timing and the workflow skeleton."""

__version__ = "0.1.0"

from .base import (
    BaseWorkflow,
    Finding,
    GeometryError,
    InfeasibleJigError,
    JigError,
    LoggerLike,
    LogManager,
    MeshFormatError,
    OsteoplanError,
    OutputStager,
    PlanError,
    RegistrationError,
    RunContext,
    RunPaths,
    SchemaError,
    StatisticsError,
    VoidCutError,
    null_logger,
    write_atomic,
)
from .timing import (
    TimedLogger,
    TimingCollector,
    TimingResult,
    timed_execution,
)

__all__ = [
    "__version__",
    # Base classes
    "BaseWorkflow",
    "LogManager",
    "OutputStager",
    "RunContext",
    "RunPaths",
    "write_atomic",
    # Errors and findings
    "Finding",
    "GeometryError",
    "InfeasibleJigError",
    "JigError",
    "MeshFormatError",
    "OsteoplanError",
    "PlanError",
    "RegistrationError",
    "SchemaError",
    "StatisticsError",
    "VoidCutError",
    # Logging
    "LoggerLike",
    "null_logger",
    # Timing
    "TimedLogger",
    "TimingCollector",
    "TimingResult",
    "timed_execution",
]
