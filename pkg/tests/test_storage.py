import json

import pytest

from errors import AdsTestError, BaselineMismatchError, StaleBaselineError
from storage import (
    BaselineRegistry,
    EventRecord,
    MetaRecord,
    RUN_LOG_NAME,
    RunLogWriter,
    StepRecord,
    TIMINGS_NAME,
    TimingRecord,
    baseline_key,
    check_compatible,
    load_verified,
    read_run_log,
)


def _meta(**kwargs):
    fields = dict(scenario="default", agent="pure_pursuit_mask", strategy="none", seed=0,
                  n_steps=3, dt=0.1, n_sectors=40, route_length=601.0)
    fields.update(kwargs)
    return MetaRecord(**fields)


def _write_run(directory, meta=None, n=3):
    with RunLogWriter(directory) as writer:
        writer.write_meta(meta or _meta(n_steps=n))
        for i in range(n):
            writer.write_step(StepRecord(step=i, s=0.5 * i, cte=0.01 * i, steering=0.0, speed=5.0),
                              TimingRecord(step=i, sim_ms=1.0, wall_ms=2.0))
        writer.write_event(EventRecord(kind="oob", step=1, sector=0, s=0.5))
    return directory


def test_run_log_round_trip(tmp_path):
    _write_run(tmp_path)
    log = read_run_log(tmp_path)
    assert log.meta.agent == "pure_pursuit_mask"
    assert [s.step for s in log.steps] == [0, 1, 2]
    assert [e.kind for e in log.events] == ["oob"]
    assert log.timing(2).wall_ms == 2.0
    assert log.timing(99).wall_ms == 0.0
    assert log.complete


def test_run_log_lines_are_canonical_json(tmp_path):
    _write_run(tmp_path)
    lines = (tmp_path / RUN_LOG_NAME).read_text(encoding="utf-8").splitlines()
    assert len(lines) == 5
    first = json.loads(lines[0])
    assert first["type"] == "meta"
    assert lines[0] == json.dumps(first, sort_keys=True, separators=(",", ":"))
    assert (tmp_path / TIMINGS_NAME).exists()


def test_read_accepts_the_run_file_itself(tmp_path):
    _write_run(tmp_path)
    assert len(read_run_log(tmp_path / RUN_LOG_NAME).steps) == 3


def test_truncated_last_line_is_ignored(tmp_path):
    _write_run(tmp_path)
    with (tmp_path / RUN_LOG_NAME).open("a", encoding="utf-8") as f:
        f.write('{"type":"step","st')
    log = read_run_log(tmp_path)
    assert len(log.steps) == 3


def test_corrupt_middle_line_is_an_error(tmp_path):
    _write_run(tmp_path)
    path = tmp_path / RUN_LOG_NAME
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[1] = "{broken"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(AdsTestError, match="Corrupt line 2"):
        read_run_log(tmp_path)


def test_run_log_needs_meta(tmp_path):
    (tmp_path / RUN_LOG_NAME).write_text('{"type":"event","kind":"oob","step":0,"sector":0,"s":0.0}\n',
                                         encoding="utf-8")
    with pytest.raises(AdsTestError, match="no meta record"):
        read_run_log(tmp_path)
    with pytest.raises(AdsTestError, match="not found"):
        read_run_log(tmp_path / "elsewhere")


def test_unknown_record_type(tmp_path):
    (tmp_path / RUN_LOG_NAME).write_text('{"type":"lap","n":1}\n', encoding="utf-8")
    with pytest.raises(AdsTestError, match="Invalid record"):
        read_run_log(tmp_path)


def test_interrupted_run_is_incomplete(tmp_path):
    with RunLogWriter(tmp_path) as writer:
        writer.write_meta(_meta(n_steps=10))
        writer.write_step(StepRecord(step=0, s=0.0, cte=0.0, steering=0.0, speed=5.0), TimingRecord(step=0))
    assert not read_run_log(tmp_path).complete


def test_meta_comes_first(tmp_path):
    with RunLogWriter(tmp_path) as writer:
        with pytest.raises(AdsTestError):
            writer.write_step(StepRecord(step=0, s=0.0, cte=0.0, steering=0.0, speed=5.0), TimingRecord(step=0))
        with pytest.raises(AdsTestError):
            writer.write_event(EventRecord(kind="oob", step=0, sector=0, s=0.0))


def test_registry_registers_and_loads(tmp_path):
    run_dir = _write_run(tmp_path / "nominal")
    registry = BaselineRegistry(tmp_path)
    entry = registry.register(run_dir, _meta())
    assert registry.lookup("pure_pursuit_mask", "default", 0) == entry
    assert registry.lookup("pure_pursuit_mask", "default", 1) is None

    reopened = BaselineRegistry(tmp_path)
    assert baseline_key("pure_pursuit_mask", "default", 0) in reopened.entries
    assert len(reopened.load("pure_pursuit_mask", "default", 0).steps) == 3
    assert reopened.load("brightness_fragile", "default", 0) is None


def test_tampered_baseline_is_stale(tmp_path):
    run_dir = _write_run(tmp_path / "nominal")
    registry = BaselineRegistry(tmp_path)
    entry = registry.register(run_dir, _meta())
    with (run_dir / RUN_LOG_NAME).open("a", encoding="utf-8") as f:
        f.write('{"type":"event","kind":"oob","step":2,"sector":1,"s":1.0}\n')
    with pytest.raises(StaleBaselineError, match="changed since it was recorded"):
        registry.load("pure_pursuit_mask", "default", 0)
    assert len(load_verified(run_dir, None).events) == 2
    with pytest.raises(StaleBaselineError):
        load_verified(run_dir, entry.sha256)


def test_compatible_baselines():
    check_compatible(_meta(strategy="refine"), _meta())
    with pytest.raises(BaselineMismatchError, match="agent"):
        check_compatible(_meta(agent="brightness_fragile"), _meta())
    with pytest.raises(BaselineMismatchError, match="n_sectors"):
        check_compatible(_meta(n_sectors=20), _meta())
    with pytest.raises(BaselineMismatchError, match="expected 'none'"):
        check_compatible(_meta(), _meta(strategy="refine"))
