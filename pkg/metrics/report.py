import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import BaseModel

from errors import UndefinedBaselineError
from simulator.scene import EventKind
from storage.baselines import check_compatible, check_reference
from storage.runlog import RunLog
from .failures import ftc, rcte, rsj
from .overhead import OverheadSummary, overhead_report
from .urban import count_infractions, driving_score, route_completion

logger = logging.getLogger("adstest")

COLLISION_KINDS = {EventKind.COLLISION.value, EventKind.COLLISION_PEDESTRIAN.value,
                   EventKind.COLLISION_VEHICLE.value}
OFF_ROAD_KINDS = {EventKind.OOB.value, EventKind.OFF_ROAD_URBAN.value}


class UrbanScores(BaseModel):
    ds: float
    rc: float
    cp: int
    cv: int
    ori: int
    rli: int
    ssi: int


class RunReport(BaseModel):
    name: str = ""
    scenario: str
    agent: str
    strategy: str
    domain: Optional[str] = None
    seed: int
    n_steps: int
    collisions: int
    oob: int
    ftc: float
    rcte: Optional[float] = None
    rsj: Optional[float] = None
    retries: int = 0
    fallbacks: int = 0
    urban: Optional[UrbanScores] = None
    overhead: Optional[OverheadSummary] = None

    @property
    def events(self) -> int:
        return self.collisions + self.oob


def build_report(log: RunLog, baseline: Optional[RunLog] = None, name: str = "",
                 baseline_sha256: Optional[str] = None) -> RunReport:
    """Metrics of one run; relative ones only when a compatible baseline is given.

    With `baseline_sha256`, a run that recorded the hash of its baseline refuses
    any baseline whose content has changed since.
    """
    meta = log.meta
    kinds = [e.kind for e in log.events]
    report = RunReport(
        name=name,
        scenario=meta.scenario,
        agent=meta.agent,
        strategy=meta.strategy,
        domain=meta.domain,
        seed=meta.seed,
        n_steps=len(log.steps),
        collisions=sum(k in COLLISION_KINDS for k in kinds),
        oob=sum(k in OFF_ROAD_KINDS for k in kinds),
        ftc=ftc(log.events, meta.n_sectors),
        retries=sum(s.retries for s in log.steps),
        fallbacks=sum(s.fallback for s in log.steps),
    )

    if meta.urban:
        progress = log.steps[-1].progress if log.steps else 0.0
        rc = route_completion(progress, meta.route_length)
        infractions = count_infractions(log.events)
        report.urban = UrbanScores(ds=driving_score(rc, infractions), rc=rc, **infractions)

    if baseline is not None:
        check_compatible(meta, baseline.meta)
        if baseline_sha256 is not None:
            check_reference(meta, baseline_sha256, f"of run '{name or meta.scenario}'")
        try:
            report.rcte = rcte(log, baseline)
            report.rsj = rsj(log, baseline)
        except UndefinedBaselineError as e:
            logger.warning(f"Relative metrics unavailable: {e}")
        report.overhead = overhead_report(log, baseline)
    return report


CSV_COLUMNS = ["name", "scenario", "agent", "strategy", "domain", "seed", "n_steps",
               "C", "OOB", "FTC", "RCTE", "RSJ", "DS", "RC", "CP", "CV", "ORI", "RLI", "SSI",
               "augment_ms", "augment_std_ms", "total_min", "vs_baseline_percent", "retries", "fallbacks"]


def _fmt(value, digits: int = 4) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def report_row(report: RunReport) -> List[str]:
    urban = report.urban
    overhead = report.overhead
    return [
        report.name, report.scenario, report.agent, report.strategy, report.domain or "",
        str(report.seed), str(report.n_steps),
        str(report.collisions), str(report.oob), _fmt(report.ftc, 1),
        _fmt(report.rcte, 2), _fmt(report.rsj, 2),
        _fmt(urban.ds, 2) if urban else "", _fmt(urban.rc, 2) if urban else "",
        *([str(getattr(urban, k)) for k in ("cp", "cv", "ori", "rli", "ssi")] if urban else [""] * 5),
        _fmt(overhead.augment_mean_ms, 1) if overhead else "",
        _fmt(overhead.augment_std_ms, 1) if overhead else "",
        _fmt(overhead.total_min, 2) if overhead else "",
        _fmt(overhead.vs_baseline_percent, 2) if overhead else "",
        str(report.retries), str(report.fallbacks),
    ]


def write_reports_csv(path: Path, reports: Sequence[RunReport]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for report in reports:
            writer.writerow(report_row(report))
    return path


def write_report_json(path: Path, report: RunReport) -> Path:
    path = Path(path)
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    return path
