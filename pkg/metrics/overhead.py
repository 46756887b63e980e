import logging
from typing import List

import numpy as np
from pydantic import BaseModel

from errors import MetricError
from storage.runlog import RunLog

logger = logging.getLogger("adstest")

# Allowed relative gap between measured run time and baseline step work plus augmentation
ACCOUNTING_TOLERANCE = 0.05


class OverheadSummary(BaseModel):
    augment_mean_ms: float
    augment_std_ms: float
    total_min: float
    baseline_total_min: float
    vs_baseline_percent: float
    # Measured total against baseline-equivalent step work plus augmentation, in percent
    accounting_gap_percent: float

    @property
    def augment_cell(self) -> str:
        return f"{self.augment_mean_ms:.1f}±{self.augment_std_ms:.1f}"

    @property
    def accounting_holds(self) -> bool:
        return abs(self.accounting_gap_percent) <= 100.0 * ACCOUNTING_TOLERANCE


def augmentation_times(log: RunLog) -> List[float]:
    """Per-step augmentation plus validation time, retries included."""
    return [log.timing(s.step).augment_ms + log.timing(s.step).validate_ms for s in log.steps]


def total_ms(log: RunLog) -> float:
    return float(sum(log.timing(s.step).wall_ms for s in log.steps))


def overhead_report(test: RunLog, baseline: RunLog) -> OverheadSummary:
    if not test.steps or not baseline.steps:
        raise MetricError("Overhead needs non-empty test and baseline logs")
    aug = np.asarray(augmentation_times(test))
    test_total = total_ms(test)
    base_total = total_ms(baseline)
    if base_total <= 0:
        raise MetricError("Baseline log has no recorded step time")

    expected = base_total * len(test.steps) / len(baseline.steps) + float(aug.sum())
    summary = OverheadSummary(
        augment_mean_ms=float(aug.mean()),
        augment_std_ms=float(aug.std()),
        total_min=test_total / 60000.0,
        baseline_total_min=base_total / 60000.0,
        vs_baseline_percent=100.0 * (test_total - base_total) / base_total,
        accounting_gap_percent=100.0 * (test_total - expected) / expected,
    )
    if not summary.accounting_holds:
        logger.warning(f"Run time {test_total / 1000.0:.1f} s is {summary.accounting_gap_percent:+.1f}% off "
                       f"baseline step work plus augmentation ({expected / 1000.0:.1f} s)")
    return summary
