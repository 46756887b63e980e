"""Registry of nominal baseline runs, one per (agent, scenario, seed)."""

import json
import logging
from pathlib import Path
from typing import Dict, Optional

from pydantic import BaseModel

from errors import BaselineError, BaselineMismatchError, StaleBaselineError
from .runlog import MetaRecord, RunLog, file_sha256, read_run_log, run_log_path

logger = logging.getLogger("adstest")

REGISTRY_NAME = "baselines.json"


class BaselineEntry(BaseModel):
    agent: str
    scenario: str
    seed: int
    path: str
    sha256: str


def baseline_key(agent: str, scenario: str, seed: int) -> str:
    return f"{agent}|{scenario}|{seed}"


def check_compatible(test: MetaRecord, baseline: MetaRecord) -> None:
    """Relative metrics only make sense against the same agent, scenario, seed and sectoring."""
    fields = ("agent", "scenario", "seed", "n_sectors", "dt")
    mismatched = [f for f in fields if getattr(test, f) != getattr(baseline, f)]
    if mismatched:
        details = ", ".join(f"{f}: {getattr(test, f)!r} vs {getattr(baseline, f)!r}" for f in mismatched)
        raise BaselineMismatchError(f"Baseline does not match the run ({details})")
    if baseline.strategy != "none":
        raise BaselineMismatchError(f"Baseline was recorded with strategy '{baseline.strategy}', expected 'none'")


def baseline_sha256(path: Path) -> str:
    """Content hash of a baseline run, given its directory or its run.jsonl."""
    run_path = run_log_path(path)
    if not run_path.is_file():
        raise BaselineError(f"Baseline run log not found: {run_path}")
    return file_sha256(run_path)


def _check_hash(where: str, actual: str, expected: Optional[str]) -> None:
    if expected is not None and actual != expected:
        raise StaleBaselineError(f"Baseline {where} changed since it was recorded "
                                 f"(sha256 {actual[:12]}, expected {expected[:12]})")


def check_reference(meta: MetaRecord, actual_sha256: str, where: str) -> None:
    """Refuse a baseline whose content differs from the one a run was compared against."""
    _check_hash(where, actual_sha256, meta.baseline_sha256)


def load_verified(run_dir: Path, expected_sha256: Optional[str]) -> RunLog:
    """Read a baseline run, refusing it when its content no longer matches the recorded hash."""
    run_path = run_log_path(run_dir)
    if expected_sha256 is not None:
        _check_hash(str(run_path), baseline_sha256(run_path), expected_sha256)
    return read_run_log(run_path)


class BaselineRegistry:
    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.path = self.directory / REGISTRY_NAME
        self.entries: Dict[str, BaselineEntry] = {}
        if self.path.exists():
            data = json.loads(self.path.read_text(encoding="utf-8"))
            self.entries = {k: BaselineEntry.model_validate(v) for k, v in data.items()}

    def _save(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        payload = {k: v.model_dump() for k, v in sorted(self.entries.items())}
        self.path.write_text(json.dumps(payload, indent=2), encoding="utf-8")

    def register(self, run_dir: Path, meta: MetaRecord) -> BaselineEntry:
        entry = BaselineEntry(agent=meta.agent, scenario=meta.scenario, seed=meta.seed,
                              path=str(Path(run_dir).resolve()),
                              sha256=baseline_sha256(run_dir))
        self.entries[baseline_key(meta.agent, meta.scenario, meta.seed)] = entry
        self._save()
        logger.info(f"Registered baseline {entry.path} for {meta.agent} on {meta.scenario} (seed {meta.seed})")
        return entry

    def lookup(self, agent: str, scenario: str, seed: int) -> Optional[BaselineEntry]:
        return self.entries.get(baseline_key(agent, scenario, seed))

    def load(self, agent: str, scenario: str, seed: int) -> Optional[RunLog]:
        entry = self.lookup(agent, scenario, seed)
        if entry is None:
            return None
        return load_verified(Path(entry.path), entry.sha256)
