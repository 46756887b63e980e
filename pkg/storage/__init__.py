from .runlog import (
    EventRecord,
    MetaRecord,
    RUN_LOG_NAME,
    RunLog,
    RunLogWriter,
    StepRecord,
    TIMINGS_NAME,
    TimingRecord,
    file_sha256,
    read_run_log,
    run_log_path,
)
from .baselines import (
    BaselineEntry,
    BaselineRegistry,
    baseline_key,
    baseline_sha256,
    check_compatible,
    check_reference,
    load_verified,
)

__all__ = [
    "EventRecord",
    "MetaRecord",
    "RUN_LOG_NAME",
    "RunLog",
    "RunLogWriter",
    "StepRecord",
    "TIMINGS_NAME",
    "TimingRecord",
    "file_sha256",
    "read_run_log",
    "run_log_path",
    "BaselineEntry",
    "BaselineRegistry",
    "baseline_key",
    "baseline_sha256",
    "check_compatible",
    "check_reference",
    "load_verified",
]
