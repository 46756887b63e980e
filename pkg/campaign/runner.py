import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn

from agents import Agent, build_agent
from augmentation.backends import Augmenter, MockAugmenter, RemoteAugmenter
from augmentation.domains import DomainSpec, get_domain
from augmentation.params import derive_seed
from augmentation.strategies import DEFAULT_PRESERVED
from config import config
from core.types import ClassId, DEFAULT_PALETTE, URBAN_CLASSES
from distillation.student import StudentAugmenter
from errors import ConfigError
from metrics.report import RunReport, build_report, write_report_json
from simulator.scenario import ScenarioConfig, load_scenario
from simulator.world import World
from storage.baselines import BaselineRegistry, baseline_sha256, load_verified
from storage.runlog import (
    EventRecord,
    MetaRecord,
    RunLog,
    RunLogWriter,
    StepRecord,
    TimingRecord,
    run_log_path,
)
from validator.validate import ValidationVerdict, ValidatorConfig, augment_validated
from .config import CampaignConfig

logger = logging.getLogger("adstest")

REPORT_NAME = "report.json"


@dataclass
class StepTrace:
    frame_id: int
    sim_ms: float = 0.0
    augment_ms: float = 0.0
    validate_ms: float = 0.0
    agent_ms: float = 0.0
    wall_ms: float = 0.0
    retries: int = 0
    fallback: bool = False
    verdict: Optional[ValidationVerdict] = None

    def timing(self) -> TimingRecord:
        return TimingRecord(step=self.frame_id, sim_ms=self.sim_ms, augment_ms=self.augment_ms,
                            validate_ms=self.validate_ms, agent_ms=self.agent_ms, wall_ms=self.wall_ms)


@dataclass
class CampaignContext:
    scenario: ScenarioConfig
    world: World
    agent: Agent
    augmenter: Optional[Augmenter] = None
    domain: Optional[DomainSpec] = None
    validator: Optional[ValidatorConfig] = None
    n_steps: int = 0
    closers: list = field(default_factory=list)

    def close(self) -> None:
        for obj in self.closers:
            obj.close()


def _preserved(cfg: CampaignConfig):
    if cfg.preserved is None:
        return DEFAULT_PRESERVED
    return frozenset(int(ClassId.from_label(label)) for label in cfg.preserved)


def build_augmenter(cfg: CampaignConfig, domain: DomainSpec) -> Augmenter:
    if cfg.strategy in ("instruction", "inpaint", "refine"):
        return MockAugmenter(cfg.strategy, domain, _preserved(cfg))
    if cfg.strategy == "student":
        return StudentAugmenter.from_checkpoint(cfg.checkpoint)
    if cfg.strategy == "remote":
        preserved = sorted(_preserved(cfg))
        return RemoteAugmenter(cfg.endpoint, cfg.remote_strategy, domain.name, preserved)
    raise ConfigError(f"Strategy '{cfg.strategy}' has no augmenter")


def build_validator(cfg: CampaignConfig, scenario: ScenarioConfig, domain: DomainSpec) -> ValidatorConfig:
    if cfg.validator.checked_classes is not None:
        checked = frozenset(int(ClassId.from_label(c)) for c in cfg.validator.checked_classes)
    elif scenario.urban:
        checked = frozenset(int(c) for c in URBAN_CLASSES)
    else:
        checked = frozenset({int(ClassId.ROAD)})
    return ValidatorConfig(threshold=cfg.validator.threshold, checked_classes=checked,
                           max_retries=cfg.validator.max_retries,
                           segmenter=domain.segmenter(DEFAULT_PALETTE))


def prepare(cfg: CampaignConfig) -> CampaignContext:
    """Load everything a run needs; configuration problems surface here, before any step."""
    if len(cfg.domains) > 1:
        raise ConfigError("run_campaign takes one domain at a time; use CampaignConfig.for_domain")
    scenario = load_scenario(cfg.scenario)
    world = scenario.build_world(DEFAULT_PALETTE)
    agent = build_agent(cfg.agent, DEFAULT_PALETTE)
    ctx = CampaignContext(scenario=scenario, world=world, agent=agent,
                          n_steps=cfg.n_steps or scenario.n_steps)
    ctx.closers.append(agent)
    if cfg.strategy != "none":
        ctx.domain = get_domain(cfg.domain)
        ctx.augmenter = build_augmenter(cfg, ctx.domain)
        ctx.closers.append(ctx.augmenter)
        ctx.validator = build_validator(cfg, scenario, ctx.domain)
    return ctx


def run_step(ctx: CampaignContext, cfg: CampaignConfig) -> Tuple[StepTrace, StepRecord, list]:
    """One synchronous step: render, augment and validate, act, advance."""
    start = time.perf_counter()
    world = ctx.world
    trace = StepTrace(frame_id=world.step_index)

    frame = world.render()
    rendered = time.perf_counter()
    trace.sim_ms = (rendered - start) * 1000.0

    agent_frame = frame
    if ctx.augmenter is not None:
        params = cfg.params.with_seed(derive_seed(cfg.seed, frame.step))
        result, verdict, retries = augment_validated(frame, ctx.augmenter, params, ctx.validator)
        trace.validate_ms = result.validate_ms
        trace.augment_ms = max(0.0, result.elapsed_ms - result.validate_ms)
        trace.retries = retries
        trace.fallback = result.fallback
        trace.verdict = verdict
        agent_frame = frame.with_images(result.images)

    acting = time.perf_counter()
    command = ctx.agent.act(agent_frame)
    advancing = time.perf_counter()
    trace.agent_ms = (advancing - acting) * 1000.0

    outcome = world.advance(command)
    end = time.perf_counter()
    trace.sim_ms += (end - advancing) * 1000.0
    trace.wall_ms = (end - start) * 1000.0

    record = StepRecord(
        step=trace.frame_id,
        s=outcome.state.s,
        cte=outcome.state.cte,
        steering=command.clamped(config.sim.steering_limit).steering_target,
        speed=outcome.state.speed,
        progress=world.progress,
        retries=trace.retries,
        fallback=trace.fallback,
        cooldown=outcome.cooldown,
    )
    events = [EventRecord(kind=e.kind.value, step=e.step, sector=e.sector, s=e.s) for e in outcome.events]
    return trace, record, events


def resolve_baseline(cfg: CampaignConfig, scenario_name: str) -> Optional[Tuple[Path, RunLog]]:
    """(run.jsonl path, log) of the baseline, verified against its registry hash when registered."""
    if cfg.baseline is not None:
        run_path = run_log_path(cfg.baseline)
        # record_baseline registers next to the run directory unless told otherwise
        registry = BaselineRegistry(cfg.baselines_dir or run_path.parent.parent)
        entry = registry.lookup(cfg.agent.kind, scenario_name, cfg.seed)
        registered = entry is not None and run_log_path(entry.path).resolve() == run_path.resolve()
        return run_path, load_verified(run_path, entry.sha256 if registered else None)
    if cfg.baselines_dir is not None:
        registry = BaselineRegistry(cfg.baselines_dir)
        entry = registry.lookup(cfg.agent.kind, scenario_name, cfg.seed)
        if entry is not None:
            return run_log_path(entry.path), load_verified(Path(entry.path), entry.sha256)
    return None


def run_campaign(cfg: CampaignConfig, show_progress: bool = False) -> Tuple[RunLog, RunReport]:
    """Drive one closed-loop run and write run.jsonl, timings.jsonl and report.json into cfg.output."""
    ctx = prepare(cfg)
    baseline = None
    if cfg.strategy != "none" or cfg.baseline is not None:
        baseline = resolve_baseline(cfg, ctx.scenario.name)
    track = ctx.world.track
    meta = MetaRecord(
        scenario=ctx.scenario.name,
        agent=cfg.agent.kind,
        strategy=cfg.strategy,
        domain=cfg.domain,
        seed=cfg.seed,
        n_steps=ctx.n_steps,
        dt=ctx.world.params.dt,
        n_sectors=track.n_sectors,
        urban=ctx.scenario.urban,
        route_length=ctx.scenario.route_length or track.total_length,
        baseline_sha256=baseline_sha256(baseline[0]) if baseline else None,
    )
    logger.info(f"Campaign '{cfg.name}': {cfg.strategy} / {cfg.domain or 'nominal'} with "
                f"{cfg.agent.kind} for {ctx.n_steps} steps -> {cfg.output}")

    columns = (SpinnerColumn(), TextColumn("[progress.description]{task.description}"),
               BarColumn(), TextColumn("{task.completed}/{task.total}"), TimeElapsedColumn())
    try:
        with RunLogWriter(cfg.output) as writer, \
                Progress(*columns, disable=not show_progress, transient=True) as progress:
            writer.write_meta(meta)
            task = progress.add_task(f"{cfg.name}", total=ctx.n_steps)
            for _ in range(ctx.n_steps):
                trace, record, events = run_step(ctx, cfg)
                writer.write_step(record, trace.timing())
                for event in events:
                    writer.write_event(event)
                progress.advance(task)
            log = writer.log
    finally:
        ctx.close()

    report = build_report(log, baseline[1] if baseline else None, name=cfg.name,
                          baseline_sha256=baseline_sha256(baseline[0]) if baseline else None)
    write_report_json(Path(cfg.output) / REPORT_NAME, report)
    logger.info(f"Campaign '{cfg.name}' done: {report.collisions} collisions, {report.oob} OOB, "
                f"FTC {report.ftc:.1f}%, {report.fallbacks} fallbacks")
    return log, report


def record_baseline(cfg: CampaignConfig, force: bool = False,
                    show_progress: bool = False) -> Tuple[Path, RunLog]:
    """Nominal run for (agent, scenario, seed), reused from the registry when still intact."""
    if cfg.strategy != "none":
        raise ConfigError(f"A baseline must be recorded with strategy 'none', not '{cfg.strategy}'")
    registry = BaselineRegistry(cfg.baselines_dir or Path(cfg.output).parent)
    scenario = load_scenario(cfg.scenario)
    if not force:
        entry = registry.lookup(cfg.agent.kind, scenario.name, cfg.seed)
        if entry is not None:
            logger.info(f"Reusing baseline {entry.path}")
            return Path(entry.path), load_verified(Path(entry.path), entry.sha256)

    log, _ = run_campaign(cfg, show_progress=show_progress)
    registry.register(cfg.output, log.meta)
    return Path(cfg.output), log
