"""End-to-end checks of the harness at desk scale."""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from agents import AgentSpec, build_agent
from api.server import BackgroundServer, ReferenceServer
from augmentation.backends import MockAugmenter, RemoteAugmenter, remote_augment
from augmentation.domains import get_domain
from augmentation.params import AugmentParams, derive_seed
from augmentation.strategies import augment
from campaign import CampaignConfig, run_campaign
from core.types import ClassId, DEFAULT_PALETTE, SemanticMask
from distillation import FrechetStats, collect_pairs, fit_student, frechet_distance, select_checkpoint
from distillation.student import checkpoint_name
from domain_distance import GROUPS, DomainScore, categorize_domains, fit_distance_model, mean_error
from metrics import driving_score, ftc, rcte, rsj
from metrics.overhead import augmentation_times
from simulator.render import Camera, Renderer
from simulator.scenario import ScenarioConfig
from simulator.scene import Scene
from simulator.vehicle import VehicleState
from storage import RUN_LOG_NAME
from storage.runlog import EventRecord, MetaRecord, RunLog, StepRecord
from validator import ValidatorConfig, calibrate_threshold, evaluate_validator, octss, validate

ROOT = Path(__file__).resolve().parent.parent
N_CLASSES = len(ClassId)


def _drive(world, n_frames, stride=1):
    agent = build_agent(AgentSpec())
    frames = []
    while len(frames) < n_frames:
        frame = world.render()
        if world.step_index % stride == 0:
            frames.append(frame)
        world.advance(agent.act(frame))
    return frames


def test_octss_matches_brute_force_counts():
    rng = np.random.default_rng(0)
    pairs = [(rng.integers(0, N_CLASSES, size=(16, 16), dtype=np.uint8),
              rng.integers(0, N_CLASSES, size=(16, 16), dtype=np.uint8),
              int(rng.integers(0, N_CLASSES))) for _ in range(1000)]
    masks = [(SemanticMask(a), SemanticMask(b), c) for a, b, c in pairs]

    start = time.perf_counter()
    scores = [octss(a, b, c) for a, b, c in masks]
    assert time.perf_counter() - start < 1.0

    for (a, b, c), score in zip(pairs, scores):
        inter = union = 0
        for x, y in zip(a.ravel().tolist(), b.ravel().tolist()):
            inter += x == c and y == c
            union += x == c or y == c
        assert score == (inter / union if union else 1.0)


def test_conservative_threshold_separates_manoeuvres():
    def band(left, extra_row=None):
        classes = np.zeros((8, 32), dtype=np.uint8)
        classes[:, left:left + 20] = int(ClassId.ROAD)
        if extra_row is not None:
            classes[extra_row, (left + 20) % 32] = int(ClassId.ROAD)
        return SemanticMask(classes)

    labeled = []
    for category, left in (("straight", 6), ("left", 0), ("right", 12)):
        labeled += [(band(left), category), (band(left, extra_row=3), category)]
    report = calibrate_threshold(labeled)
    assert report.intra.min > 0.95
    assert report.inter.max < 0.6
    row = report.row_for(0.9)
    assert row.inter_acceptance == 0.0
    assert row.intra_rejection == 0.0
    assert report.suggested_threshold <= 0.9


def test_validator_confusion_on_instruction_mock(world, night):
    augmenter = MockAugmenter("instruction", night)
    cfg = ValidatorConfig(segmenter=night.segmenter())
    outcomes = []
    for frame in _drive(world, 50, stride=10):
        for k in range(10):
            params = AugmentParams(corrupt_base_prob=0.5, seed=derive_seed(0, frame.step, k))
            result = augmenter.augment(frame, params)
            outcomes.append((validate(frame, result.images, cfg).valid, result.gt_valid))
    matrix = evaluate_validator(outcomes)
    assert matrix.total == 500
    assert matrix.fp + matrix.tn > 0 and matrix.tp + matrix.fn > 0
    assert matrix.invalid_recall >= 0.95
    assert matrix.valid_recall >= 0.95
    assert matrix.as_matrix() == [[matrix.tp, matrix.fp], [matrix.fn, matrix.tn]]


def test_inpaint_leaves_road_pixels_untouched(world, night):
    augmenter = MockAugmenter("inpaint", night, preserved_classes={int(ClassId.ROAD)})
    checked = 0
    for frame in _drive(world, 100, stride=3):
        road = frame.front.mask.binary(ClassId.ROAD)
        original = frame.front.image.pixels[road]
        for k in range(10):
            result = augmenter.augment(frame, AugmentParams(corrupt_base_prob=0.0, seed=derive_seed(1, frame.step, k)))
            assert np.array_equal(result.images[0].pixels[road], original)
            checked += 1
    assert checked == 1000


def test_nominal_closed_loop_is_stable_and_deterministic(tmp_path):
    scenario = ROOT / "scenarios" / "default.toml"
    logs = []
    for name in ("first", "second"):
        log, report = run_campaign(CampaignConfig(scenario=scenario, output=tmp_path / name, seed=7))
        assert len(log.steps) == 2000
        assert report.oob == 0
        assert report.collisions == 0
        # Stays within a quarter lane of the centreline
        assert max(abs(s.cte) for s in log.steps) < 4.0 / 4
        logs.append((tmp_path / name / RUN_LOG_NAME).read_bytes())
    assert logs[0] == logs[1]


def test_failures_grow_with_refine_noise(tmp_path, scenario_file):
    scenario = scenario_file(n_steps=260, extra="frame_height = 80\nframe_width = 160\n")
    totals = []
    for nu in (0.0, 0.3, 0.6, 0.9):
        total = 0
        for seed in (0, 1, 2):
            cfg = CampaignConfig(scenario=scenario, output=tmp_path / f"nu{nu}-seed{seed}", seed=seed,
                                 agent=AgentSpec(kind="brightness_fragile"), strategy="refine",
                                 domain="night", params=AugmentParams(noise_level=nu))
            _, report = run_campaign(cfg)
            total += report.events
        totals.append(total)
    assert all(a <= b for a, b in zip(totals, totals[1:])), totals
    assert totals[-1] > totals[0]


def _unit_log(steerings=(0.0, 0.1, -0.1), ctes=(0.2, -0.1, 0.3)):
    meta = MetaRecord(scenario="default", agent="pure_pursuit_mask", strategy="none", seed=0,
                      n_steps=3, dt=0.1, n_sectors=40, route_length=601.0)
    steps = [StepRecord(step=i, s=float(i), cte=c, steering=st, speed=5.0)
             for i, (c, st) in enumerate(zip(ctes, steerings))]
    return RunLog(meta=meta, steps=steps)


def test_metric_units():
    assert ftc([], 40) == 0.0
    events = [EventRecord(kind="oob", step=i, sector=sector, s=0.0) for i, sector in enumerate((3, 17))]
    assert ftc(events, 40) == 5.0
    assert rcte(_unit_log(), _unit_log()) == 1.0
    assert rsj(_unit_log(), _unit_log()) == 1.0
    assert driving_score(84.26, dict.fromkeys(("cp", "cv", "ori", "rli", "ssi"), 0)) == 84.26


def _gaussian(mu, var):
    return FrechetStats(mu=np.array([float(mu)]), sigma=np.array([[float(var)]]))


def test_frechet_closed_form():
    assert frechet_distance(_gaussian(0, 1), _gaussian(1, 1)) == pytest.approx(1.0, abs=1e-8)
    # (sqrt(1) - sqrt(4))^2
    assert frechet_distance(_gaussian(0, 1), _gaussian(0, 4)) == pytest.approx(1.0, abs=1e-8)
    assert frechet_distance(_gaussian(0, 4), _gaussian(0, 1)) == pytest.approx(1.0, abs=1e-8)
    assert frechet_distance(_gaussian(2, 3), _gaussian(2, 3)) == pytest.approx(0.0, abs=1e-8)


def test_student_replaces_a_slow_teacher(tmp_path, scenario_file):
    night = get_domain("night")
    clean = AugmentParams(corrupt_base_prob=0.0)
    validator_cfg = ValidatorConfig(segmenter=night.segmenter())
    world = ScenarioConfig(frame_height=40, frame_width=80).build_world()
    agent = build_agent(AgentSpec())
    scenario = scenario_file(n_steps=8, tick_ms=200.0, extra="frame_height = 40\nframe_width = 80\n")

    with BackgroundServer(ReferenceServer("127.0.0.1", 0, latency_ms=100.0)) as background:
        teacher = RemoteAugmenter(background.endpoint, "instruction", "night")
        try:
            train = collect_pairs(world, agent, teacher, 16, tmp_path / "pairs", seed=0, params=clean,
                                  validator_cfg=validator_cfg, domain="night", stride=3)
            holdout = collect_pairs(world, agent, teacher, 4, tmp_path / "holdout", seed=1, params=clean,
                                    validator_cfg=validator_cfg, domain="night", stride=3)
        finally:
            teacher.close()

        checkpoints = fit_student(train, n_epochs=10, seed=0)
        originals = [original for original, _ in holdout.pairs]
        teacher_images = [augmented for _, augmented in holdout.pairs]
        best = select_checkpoint(checkpoints, teacher_images, originals)
        assert best.fd_to_teacher == min(c.fd_to_teacher for c in checkpoints)

        student = best.student()
        for original, expected in holdout.pairs:
            error = np.abs(student.apply(original).pixels.astype(int) - expected.pixels.astype(int))
            assert error.max() <= 1

        checkpoint = best.save(tmp_path / "checkpoints" / checkpoint_name(best.epoch))
        common = dict(scenario=scenario, seed=4, params=clean)
        baseline_log, _ = run_campaign(CampaignConfig(output=tmp_path / "nominal", **common))
        teacher_log, _ = run_campaign(CampaignConfig(output=tmp_path / "teacher", strategy="remote",
                                                     domain="night", endpoint=background.endpoint,
                                                     remote_strategy="instruction", **common))
    student_log, student_report = run_campaign(CampaignConfig(output=tmp_path / "student", strategy="student",
                                                              domain="night", checkpoint=checkpoint,
                                                              baseline=tmp_path / "nominal", **common))

    assert baseline_log.complete and teacher_log.complete
    assert student_report.fallbacks == 0
    assert np.mean(augmentation_times(teacher_log)) >= 50 * np.mean(augmentation_times(student_log))
    assert student_report.overhead.vs_baseline_percent <= 5.0


def _random_poses(track, rng, n, max_offset=0.5):
    poses = []
    for _ in range(n):
        s = float(rng.uniform(0.0, track.total_length))
        x, y, heading = track.pose_at(s)
        offset = float(rng.uniform(-max_offset, max_offset))
        poses.append(VehicleState(x=x + offset * math.sin(heading), y=y - offset * math.cos(heading),
                                  heading=heading, speed=0.0, s=s, cte=offset))
    return poses


@pytest.mark.parametrize("seed", range(10))
def test_palette_shifts_land_in_their_distance_groups(track, seed):
    rng = np.random.default_rng(seed)
    camera = Camera(height=40, width=80)

    def images(palette, poses):
        renderer = Renderer(track, Scene(), camera, palette)
        return [renderer.render(pose).front.image for pose in poses]

    model = fit_distance_model(images(DEFAULT_PALETTE, _random_poses(track, rng, 60)), k=16)
    poses = _random_poses(track, rng, 20)
    scores = []
    for shift in (10, 40, 120):
        error, n = mean_error(model, images(DEFAULT_PALETTE.shifted(shift), poses))
        scores.append(DomainScore(domain=f"shift{shift}", mean_error=error, n_samples=n))
    groups = categorize_domains(scores)
    assert [groups[f"shift{shift}"] for shift in (10, 40, 120)] == list(GROUPS)


def test_remote_protocol_is_faithful_and_synchronous(server, world, night):
    frames = _drive(world, 3, stride=20)
    for strategy in ("instruction", "inpaint", "refine"):
        params = AugmentParams(seed=derive_seed(5, frames[0].step))
        local = augment(frames[0], strategy, night, params)
        remote = remote_augment(server.endpoint, frames[0], "night", strategy, params)
        assert [img.pixels.tobytes() for img in remote.images] == [img.pixels.tobytes() for img in local.images]

    augmenter = RemoteAugmenter(server.endpoint, "refine", "night")
    try:
        for frame in frames:
            augmenter.augment(frame, AugmentParams(seed=frame.step))
    finally:
        augmenter.close()
    records = server.server.served[-len(frames):]
    assert [r.frame_id for r in records] == [f.step for f in frames]
    for before, after in zip(records, records[1:]):
        assert after.received_ts >= before.replied_ts
