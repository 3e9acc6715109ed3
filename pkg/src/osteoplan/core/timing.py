"""Stage timing for CLI workflows.

Timings are logged only. Result files never carry them, so two runs with the
same seed still produce identical bytes.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, TypeVar

if TYPE_CHECKING:
    from .base import LoggerLike

T = TypeVar("T")


@dataclass
class TimingResult:
    """Outcome of one timed stage.

    Attributes:
        step_name: Stage label, e.g. "prepare" or "simulate freehand"
        elapsed_seconds: Wall-clock duration
        success: False when the stage raised
        level: Nesting depth (0 = workflow step, 1 = sub-stage)
        error: The exception raised by the stage, if any
    """

    step_name: str
    elapsed_seconds: float
    success: bool
    level: int = 0
    error: BaseException | None = field(default=None, repr=False, compare=False)

    @property
    def elapsed_formatted(self) -> str:
        if self.elapsed_seconds < 60:
            return f"{self.elapsed_seconds:.2f}s"
        minutes, seconds = divmod(self.elapsed_seconds, 60)
        return f"{int(minutes)}m {seconds:.1f}s"

    def __str__(self) -> str:
        return f"[{'OK' if self.success else 'FAILED'}] {self.step_name}: {self.elapsed_formatted}"


def timed_execution(
    func: Callable[..., T],
    step_name: str,
    *args: Any,
    logger: LoggerLike | logging.Logger | None = None,
    level: int = 0,
    **kwargs: Any,
) -> tuple[T | None, TimingResult]:
    """Call ``func`` and time it.

    Exceptions are not propagated: the returned TimingResult has
    ``success=False`` and the exception in ``error``, and the value is None.
    Callers decide whether to re-raise.
    """
    indent = "  " * level
    if logger:
        logger.info("%s%s started", indent, step_name)
    start = time.perf_counter()
    try:
        value = func(*args, **kwargs)
    except Exception as exc:
        elapsed = time.perf_counter() - start
        if logger:
            logger.error("%s%s failed after %.2fs: %s", indent, step_name, elapsed, exc)
        return None, TimingResult(step_name, elapsed, False, level, exc)
    elapsed = time.perf_counter() - start
    if logger:
        logger.info("%s%s done in %.2fs", indent, step_name, elapsed)
    return value, TimingResult(step_name, elapsed, True, level)


@dataclass
class TimingCollector:
    """Timings gathered over one workflow run."""

    results: list[TimingResult] = field(default_factory=list)

    def add(self, timing: TimingResult) -> None:
        self.results.append(timing)

    @property
    def total_seconds(self) -> float:
        # outermost level only, sub-stages are already inside their parent
        if not self.results:
            return 0.0
        top = min(r.level for r in self.results)
        return sum(r.elapsed_seconds for r in self.results if r.level == top)

    @property
    def failed_steps(self) -> list[TimingResult]:
        return [r for r in self.results if not r.success]

    def summary(self) -> str:
        lines = ["Stage timings"]
        lines.extend(f"{'  ' * (r.level + 1)}{r}" for r in self.results)
        lines.append(f"  total {self.total_seconds:.2f}s")
        if self.failed_steps:
            lines.append(f"  failed: {', '.join(r.step_name for r in self.failed_steps)}")
        return "\n".join(lines)


class TimedLogger:
    """LoggerLike wrapper that also owns a TimingCollector.

    Example:
        logger = TimedLogger(LogManager.get_console_logger("osteoplan"))
        results = logger.timed_call(run_batch, "simulate", trials, model, seeds)
        logger.info(logger.collector.summary())
    """

    def __init__(self, logger: logging.Logger, collector: TimingCollector | None = None) -> None:
        self._logger = logger
        self._collector = collector if collector is not None else TimingCollector()

    @property
    def collector(self) -> TimingCollector:
        return self._collector

    def timed_call(self, func: Callable[..., T], step_name: str, *args: Any, level: int = 0, **kwargs: Any) -> T:
        """Time ``func``, record the result and re-raise its exception, if any."""
        value, timing = timed_execution(func, step_name, *args, logger=self._logger, level=level, **kwargs)
        self._collector.add(timing)
        if timing.error is not None:
            raise timing.error
        return value  # type: ignore[return-value]

    def info(self, msg: str, *args: Any, **kwargs: Any) -> None:
        self._logger.info(msg, *args, **kwargs)

    def warning(self, msg: str, *args: Any, **kwargs: Any) -> None:
        self._logger.warning(msg, *args, **kwargs)

    def error(self, msg: str, *args: Any, **kwargs: Any) -> None:
        self._logger.error(msg, *args, **kwargs)

    def debug(self, msg: str, *args: Any, **kwargs: Any) -> None:
        self._logger.debug(msg, *args, **kwargs)

    def exception(self, msg: str, *args: Any, **kwargs: Any) -> None:
        self._logger.exception(msg, *args, **kwargs)
