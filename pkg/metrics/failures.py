from typing import Iterable, List

import numpy as np

from errors import MetricError, UndefinedBaselineError
from storage.runlog import EventRecord, RunLog, StepRecord


def ftc(events: Iterable[EventRecord], n_sectors: int) -> float:
    """Failure track coverage: percent of sectors with at least one misbehaviour."""
    if n_sectors < 1:
        raise MetricError(f"n_sectors must be >= 1, got {n_sectors}")
    sectors = set()
    for event in events:
        if not 0 <= event.sector < n_sectors:
            raise MetricError(f"Event sector {event.sector} outside 0..{n_sectors - 1}")
        sectors.add(event.sector)
    return 100.0 * len(sectors) / n_sectors


def _active(log: RunLog) -> List[StepRecord]:
    return [s for s in log.steps if not s.cooldown]


def mean_abs_cte(log: RunLog) -> float:
    steps = _active(log)
    if not steps:
        raise MetricError("No steps outside cooldown")
    return float(np.mean([abs(s.cte) for s in steps]))


def mean_jerk(log: RunLog) -> float:
    """Mean |steering change| / dt over consecutive steps, skipping pairs that touch a cooldown step."""
    if len(log.steps) < 2:
        raise MetricError(f"Steering jerk needs at least 2 steps, got {len(log.steps)}")
    rates = [
        abs(cur.steering - prev.steering) / log.meta.dt
        for prev, cur in zip(log.steps, log.steps[1:])
        if not (prev.cooldown or cur.cooldown)
    ]
    if not rates:
        raise MetricError("No consecutive steps outside cooldown")
    return float(np.mean(rates))


def rcte(test: RunLog, nominal: RunLog) -> float:
    """Mean |cte| under test over mean |cte| of the nominal run."""
    denominator = mean_abs_cte(nominal)
    if denominator == 0:
        raise UndefinedBaselineError("Nominal run has zero mean cross-track error; RCTE is undefined")
    return mean_abs_cte(test) / denominator


def rsj(test: RunLog, nominal: RunLog) -> float:
    """Mean steering rate under test over that of the nominal run."""
    denominator = mean_jerk(nominal)
    if denominator == 0:
        raise UndefinedBaselineError("Nominal run never changes steering; RSJ is undefined")
    return mean_jerk(test) / denominator
