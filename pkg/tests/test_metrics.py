import logging

import pytest

from errors import BaselineMismatchError, MetricError, StaleBaselineError, UndefinedBaselineError
from metrics import (
    build_report,
    count_infractions,
    driving_score,
    ftc,
    mean_abs_cte,
    mean_jerk,
    overhead_report,
    rcte,
    route_completion,
    rsj,
    write_reports_csv,
)
from metrics.overhead import augmentation_times
from metrics.report import CSV_COLUMNS
from storage.runlog import EventRecord, MetaRecord, RunLog, StepRecord, TimingRecord


def _meta(**kwargs):
    fields = dict(scenario="default", agent="pure_pursuit_mask", strategy="none", seed=0,
                  n_steps=4, dt=0.1, n_sectors=40, route_length=601.0)
    fields.update(kwargs)
    return MetaRecord(**fields)


def _log(ctes=(0.1, -0.2, 0.3, -0.4), steerings=(0.0, 0.1, -0.1, 0.2), cooldown=(), events=(),
         wall_ms=10.0, augment_ms=0.0, progress=None, **meta):
    steps = [
        StepRecord(step=i, s=float(i), cte=cte, steering=steer, speed=5.0,
                   progress=progress if progress is not None else 0.5 * (i + 1), cooldown=i in cooldown)
        for i, (cte, steer) in enumerate(zip(ctes, steerings))
    ]
    timings = {i: TimingRecord(step=i, wall_ms=wall_ms, augment_ms=augment_ms) for i in range(len(steps))}
    records = [EventRecord(kind=kind, step=0, sector=sector, s=0.0) for kind, sector in events]
    meta.setdefault("n_steps", len(steps))
    return RunLog(meta=_meta(**meta), steps=steps, events=records, timings=timings)


def _events(*sectors, kind="oob"):
    return [EventRecord(kind=kind, step=0, sector=s, s=0.0) for s in sectors]


def test_ftc_counts_distinct_sectors():
    assert ftc([], 40) == 0.0
    assert ftc(_events(3, 17, 3, 17, 17), 40) == 5.0
    assert ftc(_events(*range(40)), 40) == 100.0


def test_ftc_rejects_bad_sectors():
    with pytest.raises(MetricError):
        ftc(_events(40), 40)
    with pytest.raises(MetricError):
        ftc([], 0)


def test_relative_metrics_of_identical_runs():
    assert rcte(_log(), _log()) == 1.0
    assert rsj(_log(), _log()) == 1.0


def test_relative_metrics_scale():
    doubled = _log(ctes=(0.2, -0.4, 0.6, -0.8), steerings=(0.0, 0.2, -0.2, 0.4))
    assert rcte(doubled, _log()) == pytest.approx(2.0)
    assert rsj(doubled, _log()) == pytest.approx(2.0)


def test_relative_metrics_need_a_moving_baseline():
    with pytest.raises(UndefinedBaselineError):
        rcte(_log(), _log(ctes=(0.0, 0.0, 0.0, 0.0)))
    with pytest.raises(UndefinedBaselineError):
        rsj(_log(), _log(steerings=(0.1, 0.1, 0.1, 0.1)))


def test_cooldown_steps_are_excluded():
    log = _log(ctes=(0.1, 5.0, 0.3, -0.4), steerings=(0.0, 0.5, -0.1, 0.2), cooldown={1})
    assert mean_abs_cte(log) == pytest.approx((0.1 + 0.3 + 0.4) / 3)
    # Only the (2, 3) pair avoids the cooldown step
    assert mean_jerk(log) == pytest.approx(0.3 / 0.1)


def test_jerk_needs_two_steps():
    with pytest.raises(MetricError):
        mean_jerk(_log(ctes=(0.1,), steerings=(0.0,)))


def test_driving_score():
    zeros = dict.fromkeys(("cp", "cv", "ori", "rli", "ssi"), 0)
    assert driving_score(84.26, zeros) == pytest.approx(84.26)
    assert driving_score(100.0, {**zeros, "cp": 1, "rli": 2}) == pytest.approx(100.0 * 0.5 * 0.7 ** 2)
    assert driving_score(50.0, {"ssi": 1}, penalties={"ssi": 0.5}) == pytest.approx(25.0)


def test_driving_score_rejects():
    with pytest.raises(MetricError, match="Unknown infraction"):
        driving_score(50.0, {"speeding": 1})
    with pytest.raises(MetricError):
        driving_score(120.0, {})
    with pytest.raises(MetricError):
        driving_score(50.0, {"cp": -1})


def test_route_completion():
    assert route_completion(600.0, 1200.0) == 50.0
    assert route_completion(2400.0, 1200.0) == 100.0
    assert route_completion(-3.0, 1200.0) == 0.0
    with pytest.raises(MetricError):
        route_completion(10.0, 0.0)


def test_count_infractions():
    events = (_events(1, kind="collision_pedestrian") + _events(2, 3, kind="red_light")
              + _events(4, kind="oob") + _events(5, kind="off_road_urban"))
    assert count_infractions(events) == {"cp": 1, "cv": 0, "ori": 1, "rli": 2, "ssi": 0}


def test_overhead_report():
    baseline = _log(wall_ms=100.0)
    test = _log(strategy="refine", wall_ms=150.0, augment_ms=50.0)
    summary = overhead_report(test, baseline)
    assert summary.vs_baseline_percent == pytest.approx(50.0)
    assert summary.augment_cell == "50.0±0.0"
    assert summary.accounting_gap_percent == pytest.approx(0.0)
    assert summary.accounting_holds
    assert summary.total_min == pytest.approx(600.0 / 60000.0)
    assert augmentation_times(test) == [50.0] * 4


def test_broken_accounting_is_reported(caplog, monkeypatch):
    monkeypatch.setattr(logging.getLogger("adstest"), "propagate", True)
    baseline = _log(wall_ms=100.0)
    # 300 ms measured against 100 ms step work plus 50 ms augmentation
    test = _log(strategy="refine", wall_ms=300.0, augment_ms=50.0)
    with caplog.at_level(logging.WARNING, logger="adstest"):
        summary = overhead_report(test, baseline)
    assert summary.accounting_gap_percent == pytest.approx(100.0)
    assert not summary.accounting_holds
    assert "off baseline step work plus augmentation" in caplog.text


def test_overhead_needs_timed_baseline():
    with pytest.raises(MetricError):
        overhead_report(_log(), _log(wall_ms=0.0))


def test_report_for_a_default_run():
    log = _log(strategy="refine", domain="night",
               events=[("oob", 3), ("collision", 3), ("oob", 10)])
    report = build_report(log, name="night-refine")
    assert (report.collisions, report.oob, report.events) == (1, 2, 3)
    assert report.ftc == 5.0
    assert report.rcte is None and report.overhead is None
    assert report.urban is None


def test_report_against_a_baseline():
    report = build_report(_log(strategy="refine", wall_ms=20.0), _log())
    assert report.rcte == 1.0
    assert report.rsj == 1.0
    assert report.overhead.vs_baseline_percent == pytest.approx(100.0)


def test_report_with_a_still_baseline_skips_ratios():
    report = build_report(_log(strategy="refine"), _log(ctes=(0.0, 0.0, 0.0, 0.0)))
    assert report.rcte is None
    assert report.overhead is not None


def test_report_refuses_a_changed_baseline():
    test = _log(strategy="refine", baseline_sha256="a" * 64)
    with pytest.raises(StaleBaselineError, match="changed since it was recorded"):
        build_report(test, _log(), name="night", baseline_sha256="b" * 64)
    assert build_report(test, _log(), baseline_sha256="a" * 64).rcte == 1.0
    # Runs that never recorded a baseline hash accept any content
    assert build_report(_log(strategy="refine"), _log(), baseline_sha256="b" * 64).rcte == 1.0


def test_report_refuses_a_foreign_baseline():
    with pytest.raises(BaselineMismatchError, match="seed"):
        build_report(_log(strategy="refine"), _log(seed=9))


def test_urban_report():
    log = _log(urban=True, route_length=1200.0, progress=300.0,
               events=[("collision_vehicle", 1), ("red_light", 7)])
    urban = build_report(log).urban
    assert urban.rc == 25.0
    assert (urban.cv, urban.rli) == (1, 1)
    assert urban.ds == pytest.approx(25.0 * 0.6 * 0.7)


def test_reports_csv(tmp_path):
    reports = [build_report(_log(strategy="refine", wall_ms=20.0), _log(), name="a"),
               build_report(_log(urban=True, route_length=100.0, progress=50.0), name="b")]
    lines = write_reports_csv(tmp_path / "out" / "report.csv", reports).read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",") == CSV_COLUMNS
    first = dict(zip(CSV_COLUMNS, lines[1].split(",")))
    assert first["RCTE"] == "1.00" and first["DS"] == ""
    second = dict(zip(CSV_COLUMNS, lines[2].split(",")))
    assert second["RC"] == "50.00" and second["RCTE"] == ""
