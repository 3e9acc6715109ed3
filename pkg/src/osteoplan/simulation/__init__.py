"""Cut execution under freehand and vision-guided error models."""

from .error_model import (
    ZERO_ERROR,
    ErrorModel,
    ExecutionError,
    load_error_model,
    magnitude_gamma_parameters,
    sample_execution_error,
    sample_execution_errors,
    trial_rng,
    trial_seed,
    truncated_gamma_moments,
    zero_error_model,
)
from .execution import (
    CutResult,
    TrialInput,
    TrialResult,
    achieved_plane,
    allocate_methods,
    execute_cut,
    run_batch,
    run_trial,
    sample_face_points,
    tilted_normal,
)
from .records import (
    read_results,
    record_frame,
    record_planned_cut,
    record_tumor,
    results_bytes,
    results_document,
    trial_to_record,
)
from .schema import (
    SCHEMA_VERSION,
    BatchEntry,
    BatchManifest,
    CutRecord,
    DistributionFamily,
    DistributionSpec,
    ErrorModelSpec,
    MethodEnum,
    TrialRecord,
    TrialResultsDocument,
)

__all__ = [
    "SCHEMA_VERSION",
    "ZERO_ERROR",
    "BatchEntry",
    "BatchManifest",
    "CutRecord",
    "CutResult",
    "DistributionFamily",
    "DistributionSpec",
    "ErrorModel",
    "ErrorModelSpec",
    "ExecutionError",
    "MethodEnum",
    "TrialInput",
    "TrialRecord",
    "TrialResult",
    "TrialResultsDocument",
    "achieved_plane",
    "allocate_methods",
    "execute_cut",
    "load_error_model",
    "magnitude_gamma_parameters",
    "read_results",
    "record_frame",
    "record_planned_cut",
    "record_tumor",
    "results_bytes",
    "results_document",
    "run_batch",
    "run_trial",
    "sample_execution_error",
    "sample_execution_errors",
    "sample_face_points",
    "tilted_normal",
    "trial_rng",
    "trial_seed",
    "trial_to_record",
    "truncated_gamma_moments",
    "zero_error_model",
]
