"""Time-varying multivariate statistical process control for 1 Hz telemetry.

The pipeline: ingest multi-day CSV logs onto per-second grids, train
an independent PCA model per second-of-day slice, monitor new days
with Hotelling's T-squared against an F-distribution control limit,
and diagnose out-of-control seconds by decomposing T-squared into
per-variable contributions.

Numeric kernels run on a compiled extension when available and fall
back to pure Python otherwise; both produce bit-identical results
(``tvspc.backend_name`` says which one is active).
"""

from ._backend import BACKEND_NAME as backend_name
from .diagnose import Diagnosis, FaultEvent, contributions, detect_events
from .errors import (
    CorruptModelError,
    DegenerateSliceError,
    DegreesOfFreedomError,
    DimensionMismatchError,
    EigenConvergenceError,
    EmptyInputError,
    LogParseError,
    ModelFormatError,
    SchemaError,
    ThresholdError,
    TimestampOrderError,
    TrainingError,
    TvspcError,
    UnfillableError,
    UnsupportedFormatError,
)
from .ingest import (
    SECONDS_PER_DAY,
    DayGrid,
    LogSchema,
    RawLogRecord,
    TrainingTensor,
    fill_and_assemble,
    grid_day,
    group_records_by_day,
    header_names,
    parse_log,
    write_log_csv,
)
from .linalg import EigenResult, correlation_matrix, symmetric_eigen
from .monitor import (
    MonitorPoint,
    Observation,
    hotelling_t2,
    monitor_point,
    monitor_series,
    project,
    ucl_formula,
)
from .persist import export_jsonl, load_model, load_slice, save_model
from .preprocess import EPS_STD, SliceStats, slice_stats, standardize
from .statfun import FParams, f_cdf, f_quantile, ln_gamma, regularized_incomplete_beta
from .synthgen import (
    FaultSpec,
    ScenarioSpec,
    VariableSpec,
    default_scenario,
    dump_scenario,
    generate_day,
    generate_noc,
    inject_fault,
    load_scenario,
    mean_curves,
    noc_std,
)
from .train import (
    SliceModel,
    TpcaModel,
    select_global_r,
    train,
    train_slice,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "__version__",
    # errors
    "TvspcError",
    "SchemaError",
    "LogParseError",
    "EmptyInputError",
    "TimestampOrderError",
    "UnfillableError",
    "DegenerateSliceError",
    "EigenConvergenceError",
    "TrainingError",
    "ThresholdError",
    "DegreesOfFreedomError",
    "DimensionMismatchError",
    "ModelFormatError",
    "UnsupportedFormatError",
    "CorruptModelError",
    # ingest
    "SECONDS_PER_DAY",
    "LogSchema",
    "RawLogRecord",
    "DayGrid",
    "TrainingTensor",
    "header_names",
    "parse_log",
    "group_records_by_day",
    "grid_day",
    "fill_and_assemble",
    "write_log_csv",
    # preprocess / linalg / statfun
    "EPS_STD",
    "SliceStats",
    "slice_stats",
    "standardize",
    "EigenResult",
    "correlation_matrix",
    "symmetric_eigen",
    "FParams",
    "ln_gamma",
    "regularized_incomplete_beta",
    "f_cdf",
    "f_quantile",
    # train
    "SliceModel",
    "TpcaModel",
    "train",
    "train_slice",
    "select_global_r",
    # monitor
    "Observation",
    "MonitorPoint",
    "ucl_formula",
    "project",
    "hotelling_t2",
    "monitor_point",
    "monitor_series",
    # diagnose
    "Diagnosis",
    "FaultEvent",
    "contributions",
    "detect_events",
    # synthgen
    "VariableSpec",
    "ScenarioSpec",
    "FaultSpec",
    "mean_curves",
    "noc_std",
    "generate_day",
    "generate_noc",
    "inject_fault",
    "default_scenario",
    "dump_scenario",
    "load_scenario",
    # persist
    "save_model",
    "load_model",
    "load_slice",
    "export_jsonl",
]
