from __future__ import annotations

import logging
import os
import tempfile
from collections.abc import Callable
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Generic, Protocol, TypeVar, runtime_checkable

from .timing import TimedLogger, TimingCollector

logger = logging.getLogger(__name__)

InputT = TypeVar("InputT")
PreparedT = TypeVar("PreparedT")
ResultT = TypeVar("ResultT")
OutputT = TypeVar("OutputT")
T = TypeVar("T")


@runtime_checkable
class LoggerLike(Protocol):
    """What workflows log through: a logging.Logger, a TimedLogger or a silenced logger."""

    def info(self, msg: str, *args: Any, **kwargs: Any) -> None: ...

    def warning(self, msg: str, *args: Any, **kwargs: Any) -> None: ...

    def error(self, msg: str, *args: Any, **kwargs: Any) -> None: ...

    def debug(self, msg: str, *args: Any, **kwargs: Any) -> None: ...

    def exception(self, msg: str, *args: Any, **kwargs: Any) -> None: ...


def _silenced(name: str) -> logging.Logger:
    silent = logging.getLogger(name)
    silent.addHandler(logging.NullHandler())
    silent.propagate = False
    return silent


# default for library calls and tests that do not care about output
null_logger = _silenced("osteoplan.null")


class OsteoplanError(RuntimeError):
    """Generic osteoplan runtime error."""


class GeometryError(OsteoplanError):
    """Raised for degenerate, collinear or coplanar geometric input."""


class MeshFormatError(GeometryError):
    """Raised when a mesh file cannot be read or holds malformed records."""


class PlanError(OsteoplanError):
    """Raised for malformed resection plans or tumor models."""


class JigError(OsteoplanError):
    """Raised for catalog, mating or pin assignment problems."""


class InfeasibleJigError(JigError):
    """Raised when no jig pose brings every slot within the feasibility limit."""


class RegistrationError(OsteoplanError):
    """Raised for unusable fiducials or a projection that misses the bone."""


class VoidCutError(OsteoplanError):
    """Raised when a cutting plane does not intersect the bone."""


class SchemaError(OsteoplanError):
    """Raised when an input document fails validation or schemas do not match."""


class StatisticsError(OsteoplanError):
    """Raised for empty samples."""


@dataclass(frozen=True)
class Finding:
    """Non-fatal observation reported instead of raising."""

    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class RunPaths:
    """Directories used by one CLI run."""

    output_dir: Path
    log_dir: Path

    def ensure(self) -> None:
        for path in (self.output_dir, self.log_dir):
            path.mkdir(parents=True, exist_ok=True)


@dataclass
class RunContext:
    """Shared runtime context for every workflow execution.

    Attributes:
        run_id: Identifier for this run (subcommand name plus seed, usually)
        paths: Output and log directories
        logger: Logger instance (LoggerLike or logging.Logger)
        timing_collector: Optional collector for timing results
    """

    run_id: str
    paths: RunPaths
    logger: LoggerLike | logging.Logger
    timing_collector: TimingCollector | None = field(default=None)


class LogManager:
    """Factory that produces structured loggers for runs.

    Supports PATH_LOG environment variable for centralized log directory.
    If PATH_LOG is set, logs are written to PATH_LOG/<logger_name>/YYYYMMDD.log
    Otherwise, falls back to the provided log_dir.
    """

    ENV_PATH_LOG = "PATH_LOG"
    FORMAT = "%(asctime)s %(levelname)s %(message)s"

    def __init__(self, log_dir: Path, logger_name: str | None = None) -> None:
        self._name = logger_name or f"osteoplan.{log_dir.name}"

        env_log_path = os.environ.get(self.ENV_PATH_LOG)
        if env_log_path:
            self._log_dir = Path(env_log_path) / self._name
        else:
            self._log_dir = log_dir

        self._log_dir.mkdir(parents=True, exist_ok=True)

    @property
    def log_dir(self) -> Path:
        return self._log_dir

    def create_logger(self) -> logging.Logger:
        log_file = self._log_dir / f"{datetime.now():%Y%m%d}.log"
        run_logger = logging.getLogger(self._name)
        run_logger.setLevel(logging.INFO)
        if not any(
            isinstance(handler, logging.FileHandler) and handler.baseFilename == str(log_file)
            for handler in run_logger.handlers
        ):
            file_handler = logging.FileHandler(log_file, encoding="utf-8")
            file_handler.setFormatter(logging.Formatter(self.FORMAT))
            run_logger.addHandler(file_handler)
        return run_logger

    @classmethod
    def get_console_logger(cls, name: str, level: int = logging.INFO) -> logging.Logger:
        """Get a console-only logger (no file output)."""
        console_logger = logging.getLogger(name)
        console_logger.setLevel(level)
        if not any(isinstance(h, logging.StreamHandler) for h in console_logger.handlers):
            console_handler = logging.StreamHandler()
            console_handler.setFormatter(logging.Formatter(cls.FORMAT))
            console_logger.addHandler(console_handler)
        return console_logger


class OutputStager:
    """Collects output files in memory and writes them atomically on commit.

    Nothing touches the output directory until commit(); each file is written
    to a temporary sibling and moved into place with os.replace.
    """

    def __init__(self, base_dir: Path) -> None:
        self._base_dir = base_dir
        self._pending: dict[Path, bytes] = {}

    @property
    def pending(self) -> list[Path]:
        return sorted(self._pending)

    def stage(self, relative: str | Path, payload: bytes | str) -> Path:
        target = self._base_dir / relative
        data = payload.encode("utf-8") if isinstance(payload, str) else payload
        self._pending[target] = data
        return target

    def discard(self) -> None:
        self._pending.clear()

    def commit(self) -> list[Path]:
        written = []
        for target in sorted(self._pending):
            write_atomic(target, self._pending[target])
            written.append(target)
        self._pending.clear()
        return written


def write_atomic(target: Path, data: bytes) -> None:
    """Write bytes to target through a temporary file and rename."""
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


class BaseWorkflow(Generic[InputT, PreparedT, ResultT, OutputT]):
    """
    Template method based workflow skeleton.

    The execute method coordinates the high level flow while subclasses
    implement the individual steps. Files are staged on ``self.stager`` during
    postprocess and committed only once every step succeeded.
    """

    def __init__(self, context: RunContext) -> None:
        self.context = context
        self.stager = OutputStager(context.paths.output_dir)

    def before_run(self) -> None:
        """Hook executed right before the template method starts."""

    def after_run(self, result: OutputT) -> OutputT:
        """Hook executed right after the template method completes."""
        return result

    def prepare(self, payload: InputT) -> PreparedT:  # pragma: no cover - abstract
        raise NotImplementedError

    def run(self, prepared: PreparedT) -> ResultT:  # pragma: no cover - abstract
        raise NotImplementedError

    def postprocess(self, result: ResultT) -> OutputT:  # pragma: no cover - abstract
        raise NotImplementedError

    def timed(self, func: Callable[..., T], name: str, *args: Any, level: int = 2) -> T:
        """Run one piece of work, timed when the context logger is a TimedLogger."""
        run_logger = self.context.logger
        if isinstance(run_logger, TimedLogger):
            return run_logger.timed_call(func, name, *args, level=level)
        return func(*args)

    def execute(self, payload: InputT) -> OutputT:
        """Run prepare, run and postprocess, then commit staged outputs."""
        self.before_run()
        self.context.logger.info("Workflow %s started.", self.context.run_id)
        try:
            prepared = self.timed(self.prepare, "prepare", payload, level=1)
            result = self.timed(self.run, "run", prepared, level=1)
            output = self.timed(self.postprocess, "postprocess", result, level=1)
        except BaseException:
            self.stager.discard()
            raise

        self.context.paths.ensure()
        for path in self.stager.commit():
            self.context.logger.info("Wrote %s", path)
        final = self.after_run(output)
        if self.context.timing_collector is not None:
            self.context.logger.info("\n%s", self.context.timing_collector.summary())
        self.context.logger.info("Workflow %s finished.", self.context.run_id)
        return final
