"""Run logs on disk.

A run directory holds `run.jsonl` (meta, step and event records; identical for
identical runs) and `timings.jsonl` (per-step stage durations). Both files are
flushed line by line, so an interrupted run leaves a readable prefix.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from errors import AdsTestError

logger = logging.getLogger("adstest")

RUN_LOG_NAME = "run.jsonl"
TIMINGS_NAME = "timings.jsonl"


class MetaRecord(BaseModel):
    type: Literal["meta"] = "meta"
    scenario: str
    agent: str
    strategy: str
    domain: Optional[str] = None
    seed: int
    n_steps: int
    dt: float
    n_sectors: int
    urban: bool = False
    route_length: float
    # Content hash of the baseline run this run was compared against, when known
    baseline_sha256: Optional[str] = None


class StepRecord(BaseModel):
    type: Literal["step"] = "step"
    step: int
    s: float
    cte: float
    steering: float
    speed: float
    progress: float = 0.0
    retries: int = 0
    fallback: bool = False
    cooldown: bool = False


class EventRecord(BaseModel):
    type: Literal["event"] = "event"
    kind: str
    step: int
    sector: int
    s: float


class TimingRecord(BaseModel):
    step: int
    sim_ms: float = Field(default=0.0, ge=0)
    augment_ms: float = Field(default=0.0, ge=0)
    validate_ms: float = Field(default=0.0, ge=0)
    agent_ms: float = Field(default=0.0, ge=0)
    wall_ms: float = Field(default=0.0, ge=0)


Record = Union[MetaRecord, StepRecord, EventRecord]
_record_adapter = TypeAdapter(Record)


def _dumps(record: BaseModel) -> str:
    return json.dumps(record.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


class RunLog(BaseModel):
    meta: MetaRecord
    steps: List[StepRecord] = Field(default_factory=list)
    events: List[EventRecord] = Field(default_factory=list)
    timings: Dict[int, TimingRecord] = Field(default_factory=dict)

    def timing(self, step: int) -> TimingRecord:
        return self.timings.get(step) or TimingRecord(step=step)

    @property
    def complete(self) -> bool:
        return len(self.steps) == self.meta.n_steps


class RunLogWriter:
    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path = self.directory / RUN_LOG_NAME
        self._run = self.path.open("w", encoding="utf-8", buffering=1)
        self._timings = (self.directory / TIMINGS_NAME).open("w", encoding="utf-8", buffering=1)
        self.log = None

    def __enter__(self) -> "RunLogWriter":
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def _write(self, handle, record: BaseModel) -> None:
        handle.write(_dumps(record) + "\n")
        handle.flush()

    def write_meta(self, meta: MetaRecord) -> None:
        self.log = RunLog(meta=meta)
        self._write(self._run, meta)

    def write_step(self, record: StepRecord, timing: TimingRecord) -> None:
        if self.log is None:
            raise AdsTestError("write_meta must come before the first step")
        self.log.steps.append(record)
        self.log.timings[record.step] = timing
        self._write(self._run, record)
        self._write(self._timings, timing)

    def write_event(self, record: EventRecord) -> None:
        if self.log is None:
            raise AdsTestError("write_meta must come before the first event")
        self.log.events.append(record)
        self._write(self._run, record)

    def close(self) -> None:
        for handle in (self._run, self._timings):
            if not handle.closed:
                handle.close()


def _read_lines(path: Path) -> List[dict]:
    lines = path.read_text(encoding="utf-8").splitlines()
    rows = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as e:
            if number == len(lines):
                logger.warning(f"Ignoring truncated last line of {path}")
                break
            raise AdsTestError(f"Corrupt line {number} in {path}: {e}") from e
    return rows


def run_log_path(path: Path) -> Path:
    """The run.jsonl of a run directory, or `path` itself when it names the file."""
    path = Path(path)
    return path / RUN_LOG_NAME if path.is_dir() else path


def read_run_log(path: Path) -> RunLog:
    """Load a run directory (or its run.jsonl) and merge in timings when present."""
    run_path = run_log_path(path)
    if not run_path.exists():
        raise AdsTestError(f"Run log not found: {run_path}")

    meta: Optional[MetaRecord] = None
    steps: List[StepRecord] = []
    events: List[EventRecord] = []
    for row in _read_lines(run_path):
        try:
            record = _record_adapter.validate_python(row)
        except ValidationError as e:
            raise AdsTestError(f"Invalid record in {run_path}: {e}") from e
        if isinstance(record, MetaRecord):
            meta = record
        elif isinstance(record, StepRecord):
            steps.append(record)
        else:
            events.append(record)
    if meta is None:
        raise AdsTestError(f"Run log {run_path} has no meta record")

    timings: Dict[int, TimingRecord] = {}
    timings_path = run_path.parent / TIMINGS_NAME
    if timings_path.exists():
        for row in _read_lines(timings_path):
            timing = TimingRecord.model_validate(row)
            timings[timing.step] = timing
    return RunLog(meta=meta, steps=steps, events=events, timings=timings)


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
