"""Execution-error sampling and per-trial random streams."""

from __future__ import annotations

import functools
import zlib
from pathlib import Path
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
import orjson
from pydantic import ValidationError
from scipy.optimize import least_squares
from scipy.special import gammainc
from scipy.stats import gamma, truncnorm

from ..core import SchemaError
from .schema import DistributionFamily, DistributionSpec, ErrorModelSpec

# one model per file; the name mirrors the domain type
ErrorModel = ErrorModelSpec


class ExecutionError(NamedTuple):
    dt: float  # mm of margin gained, positive away from the tumor
    droll: float  # deg about the pelvic X axis
    dpitch: float  # deg about the pelvic Y axis


ZERO_ERROR = ExecutionError(0.0, 0.0, 0.0)


def zero_error_model(seed: int = 0) -> ErrorModel:
    return ErrorModel(seed=seed)


def truncated_gamma_moments(shape: float, scale: float, bound: float | None) -> tuple[float, float]:
    """Mean and sd of a gamma(shape, scale) variable conditioned on x <= bound."""
    if bound is None:
        return shape * scale, float(np.sqrt(shape) * scale)
    x = bound / scale
    mass = gammainc(shape, x)
    first = shape * scale * gammainc(shape + 1.0, x) / mass
    second = shape * (shape + 1.0) * scale**2 * gammainc(shape + 2.0, x) / mass
    return float(first), float(np.sqrt(max(second - first**2, 0.0)))


@functools.lru_cache(maxsize=64)
def magnitude_gamma_parameters(mean: float, sd: float, bound: float | None) -> tuple[float, float]:
    """(shape, scale) of the gamma whose magnitude, truncated at bound, has this mean and sd."""
    shape, scale = (mean / sd) ** 2, sd**2 / mean
    if bound is None:
        return shape, scale

    def residual(log_params: npt.NDArray[np.float64]) -> list[float]:
        m, s = truncated_gamma_moments(float(np.exp(log_params[0])), float(np.exp(log_params[1])), bound)
        return [m / mean - 1.0, s / sd - 1.0]

    fit = least_squares(residual, np.log([shape, scale]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if not np.all(np.isfinite(fit.fun)) or np.max(np.abs(fit.fun)) > 1e-6:
        raise SchemaError(f"no truncated gamma has mean {mean} and sd {sd} below {bound}")
    return float(np.exp(fit.x[0])), float(np.exp(fit.x[1]))


def _draw(
    spec: DistributionSpec, family: DistributionFamily, rng: np.random.Generator, size: int
) -> npt.NDArray[np.float64]:
    if spec.sd == 0:
        return np.full(size, float(spec.mean))
    if family is DistributionFamily.MAGNITUDE_GAMMA:
        shape, scale = magnitude_gamma_parameters(spec.mean, spec.sd, spec.trunc)
        top = 1.0 if spec.trunc is None else float(gamma.cdf(spec.trunc, shape, scale=scale))
        magnitude = gamma.ppf(rng.random(size) * top, shape, scale=scale)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return np.asarray(sign * magnitude, dtype=np.float64)
    if family is DistributionFamily.TRUNCATED_GAUSSIAN and spec.trunc is not None:
        low = (-spec.trunc - spec.mean) / spec.sd
        high = (spec.trunc - spec.mean) / spec.sd
        return np.asarray(truncnorm.rvs(low, high, loc=spec.mean, scale=spec.sd, size=size, random_state=rng))
    return rng.normal(spec.mean, spec.sd, size=size)


def sample_execution_error(model: ErrorModel, rng: np.random.Generator) -> ExecutionError:
    """One (dt, droll, dpitch) draw; deterministic for a seeded generator."""
    dt, droll, dpitch = sample_execution_errors(model, rng, 1)[0]
    return ExecutionError(float(dt), float(droll), float(dpitch))


def sample_execution_errors(model: ErrorModel, rng: np.random.Generator, count: int) -> npt.NDArray[np.float64]:
    """(count, 3) draws of (dt, droll, dpitch), one column per component."""
    return np.column_stack(
        [_draw(spec, model.family, rng, count) for spec in (model.dt, model.roll, model.pitch)]
    )


def trial_seed(run_seed: int, specimen_id: str, side: str, stream: int = 0) -> np.random.SeedSequence:
    """Seed of one hemipelvis, independent of the order trials are run in.

    stream 0 drives the cut errors, stream 1 the registration of guided trials.
    """
    key = zlib.crc32(f"{specimen_id}:{side}".encode())
    return np.random.SeedSequence([run_seed, key, stream])


def trial_rng(run_seed: int, specimen_id: str, side: str, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(trial_seed(run_seed, specimen_id, side, stream))


def load_error_model(path: str | Path) -> ErrorModel:
    try:
        return ErrorModel.model_validate(orjson.loads(Path(path).read_bytes()))
    except (orjson.JSONDecodeError, ValidationError) as exc:
        raise SchemaError(f"invalid error model {path}: {exc}") from exc
