import asyncio
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from agents import AgentSpec, build_agent
from api.server import ReferenceServer
from augmentation.backends import MockAugmenter
from augmentation.domains import get_available_categories, get_domain, get_domains_by_category
from augmentation.params import AugmentParams, derive_seed
from campaign.config import load_campaign
from campaign.runner import record_baseline, run_campaign
from core.dataset import Dataset
from core.types import Frame, View
from distillation.collect import PairDataset, collect_pairs
from distillation.student import checkpoint_name, fit_student, load_checkpoints, select_checkpoint
from domain_distance.categorize import (
    DomainScore,
    categorize_domains,
    read_scores_csv,
    strategy_agreement,
    write_agreement_csv,
    write_scores_csv,
)
from domain_distance.model import fit_distance_model, mean_error
from errors import AdsTestError, ConfigError
from metrics.report import RunReport, build_report, write_reports_csv
from simulator.scenario import load_scenario
from simulator.world import World
from storage.baselines import baseline_sha256
from storage.runlog import RUN_LOG_NAME, read_run_log, run_log_path
from validator.calibration import CalibrationReport, calibrate_threshold, collect_calibration_set
from validator.confusion import ConfusionMatrix, evaluate_validator
from validator.validate import ValidatorConfig, validate

# Initialize rich console
console = Console()


def _fmt(value: Optional[float], digits: int = 2) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def display_domains():
    """Display the ODD catalogue, one row per category"""
    table = Table(title="ODD Domain Catalogue")
    table.add_column("Category", style="cyan", no_wrap=True)
    table.add_column("Domains", style="magenta")
    table.add_column("Names", style="green")
    table.add_column("Descriptions", style="dim")

    for category in get_available_categories():
        domains = get_domains_by_category(category)
        table.add_row(
            category.upper(),
            str(len(domains)),
            ", ".join(d.name for d in domains),
            "\n".join(f"{d.name}: {d.description}" for d in domains),
        )
    console.print(table)


def display_reports(reports: Sequence[RunReport]):
    table = Table(title="Failures")
    for column in ("Run", "Domain", "Strategy", "Agent", "C", "OOB", "FTC", "RCTE", "RSJ", "Retries", "Fallbacks"):
        table.add_column(column, justify="left" if column in ("Run", "Domain", "Strategy", "Agent") else "right")
    for r in reports:
        table.add_row(r.name, r.domain or "nominal", r.strategy, r.agent, str(r.collisions), str(r.oob),
                      f"{r.ftc:.1f}%", _fmt(r.rcte), _fmt(r.rsj), str(r.retries), str(r.fallbacks))
    console.print(table)

    urban = [r for r in reports if r.urban is not None]
    if urban:
        table = Table(title="Urban Driving")
        for column in ("Run", "Domain", "DS", "RC", "CP", "CV", "ORI", "RLI", "SSI"):
            table.add_column(column, justify="left" if column in ("Run", "Domain") else "right")
        for r in urban:
            u = r.urban
            table.add_row(r.name, r.domain or "nominal", f"{u.ds:.2f}", f"{u.rc:.2f}",
                          str(u.cp), str(u.cv), str(u.ori), str(u.rli), str(u.ssi))
        console.print(table)

    timed = [r for r in reports if r.overhead is not None]
    if timed:
        table = Table(title="Overhead")
        for column in ("Run", "Augmentation Time (ms)", "Testing Run Time (min)", "vs Baseline", "Accounting Gap"):
            table.add_column(column, justify="left" if column == "Run" else "right")
        for r in timed:
            o = r.overhead
            gap = f"{o.accounting_gap_percent:+.1f}%"
            table.add_row(r.name, o.augment_cell, f"{o.total_min:.2f}", f"{o.vs_baseline_percent:+.1f}%",
                          gap if o.accounting_holds else f"[red]{gap}[/red]")
        console.print(table)


def display_confusion(matrix: ConfusionMatrix):
    table = Table(title="Validator Confusion Matrix")
    table.add_column("", style="bold")
    table.add_column("GT valid", justify="right")
    table.add_column("GT invalid", justify="right")
    cells = matrix.cells()
    table.add_row("Predicted valid", cells[0][0], cells[0][1])
    table.add_row("Predicted invalid", cells[1][0], cells[1][1])
    console.print(table)
    console.print(f"[bold]Matrix:[/bold] {matrix.as_matrix()}")


def display_calibration(report: CalibrationReport, step: float = 0.05):
    spread = Table(title=f"OC-TSS over {report.n_masks} masks")
    for column in ("Pairs", "Count", "Min", "Median", "Max"):
        spread.add_column(column, justify="left" if column == "Pairs" else "right")
    for label, s in (("intra-category", report.intra), ("inter-category", report.inter)):
        spread.add_row(label, str(s.count), _fmt(s.min, 3), _fmt(s.median, 3), _fmt(s.max, 3))
    console.print(spread)

    table = Table(title="Candidate Thresholds")
    table.add_column("Threshold", justify="right")
    table.add_column("Inter accepted", justify="right")
    table.add_column("Intra rejected", justify="right")
    for row in report.rows:
        on_grid = abs(round(row.threshold / step) * step - row.threshold) < 1e-9
        if on_grid or row.threshold == report.suggested_threshold:
            style = "bold green" if row.threshold == report.suggested_threshold else None
            table.add_row(f"{row.threshold:.2f}", f"{100 * row.inter_acceptance:.1f}%",
                          f"{100 * row.intra_rejection:.1f}%", style=style)
    console.print(table)
    if report.suggested_threshold is not None:
        console.print(f"[bold green]Smallest threshold with no inter-category acceptance:[/bold green] "
                      f"{report.suggested_threshold:.2f}")


def cmd_run(config_path: str, baseline: Optional[str] = None, steps: Optional[int] = None,
            progress: bool = True) -> List[RunReport]:
    cfg = load_campaign(Path(config_path))
    updates = {}
    if baseline is not None:
        if not Path(baseline).exists():
            raise ConfigError(f"Baseline path does not exist: {baseline}")
        updates["baseline"] = Path(baseline)
    if steps is not None:
        updates["n_steps"] = steps
    cfg = cfg.model_copy(update=updates)

    reports = []
    for domain in cfg.domains or [None]:
        single = cfg.for_domain(domain) if domain else cfg
        console.print(f"\n[bold cyan]Running campaign:[/bold cyan] {single.name} "
                      f"({single.strategy}, {domain or 'nominal'})")
        _, report = run_campaign(single, show_progress=progress)
        console.print(f"[bold green]✓[/bold green] Wrote {Path(single.output) / RUN_LOG_NAME}")
        reports.append(report)
    display_reports(reports)
    return reports


def cmd_baseline(config_path: str, force: bool = False, progress: bool = True) -> Path:
    cfg = load_campaign(Path(config_path))
    run_dir, log = record_baseline(cfg, force=force, show_progress=progress)
    console.print(Panel(f"[bold]Agent:[/bold] {log.meta.agent}\n"
                        f"[bold]Scenario:[/bold] {log.meta.scenario}\n"
                        f"[bold]Seed:[/bold] {log.meta.seed}\n"
                        f"[bold]Steps:[/bold] {len(log.steps)}\n"
                        f"[bold]Run:[/bold] {run_dir}",
                        title="Nominal Baseline", border_style="green"))
    return run_dir


def _mock_augmenter(strategy: str, domain_name: str) -> MockAugmenter:
    if strategy not in ("instruction", "inpaint", "refine"):
        raise ConfigError(f"Unknown augmentation strategy '{strategy}'")
    return MockAugmenter(strategy, get_domain(domain_name))


def _validator_for(domain_name: Optional[str], threshold: Optional[float] = None) -> ValidatorConfig:
    kwargs = {}
    if threshold is not None:
        kwargs["threshold"] = threshold
    if domain_name:
        kwargs["segmenter"] = get_domain(domain_name).segmenter()
    return ValidatorConfig(**kwargs)


def _world_and_agent(scenario_path: str):
    scenario = load_scenario(Path(scenario_path))
    return scenario, scenario.build_world(), build_agent(AgentSpec())


def cmd_distill_collect(scenario_path: str, domain: str, strategy: str, n: int, out: str,
                        seed: int = 0, stride: int = 1, unfiltered: bool = False,
                        corrupt_prob: Optional[float] = None, noise_level: Optional[float] = None,
                        progress: bool = True) -> PairDataset:
    _, world, agent = _world_and_agent(scenario_path)
    augmenter = _mock_augmenter(strategy, domain)
    updates = {k: v for k, v in (("corrupt_base_prob", corrupt_prob), ("noise_level", noise_level))
               if v is not None}
    params = AugmentParams(**updates)
    dataset = collect_pairs(world, agent, augmenter, n, Path(out), seed=seed, params=params,
                            validator_cfg=_validator_for(domain), domain=domain, stride=stride,
                            unfiltered=unfiltered, show_progress=progress)
    kind = "labelled samples" if unfiltered else "validated pairs"
    console.print(f"[bold green]✓[/bold green] {len(dataset)} {kind} written to {out}")
    return dataset


def cmd_distill_fit(pairs_dir: str, out: str, epochs: Optional[int] = None, seed: int = 0) -> Path:
    dataset = PairDataset.load(Path(pairs_dir))
    with console.status(f"[bold yellow]Fitting student on {len(dataset)} pairs...[/bold yellow]"):
        checkpoints = fit_student(dataset, n_epochs=epochs, seed=seed)
    out_dir = Path(out)
    for checkpoint in checkpoints:
        checkpoint.save(out_dir / checkpoint_name(checkpoint.epoch))

    table = Table(title="Student Checkpoints")
    table.add_column("Epoch", justify="right")
    table.add_column("Training MSE", justify="right")
    for checkpoint in checkpoints:
        table.add_row(str(checkpoint.epoch), f"{checkpoint.mse:.3e}")
    console.print(table)
    return out_dir


def cmd_distill_select(checkpoints_dir: str, holdout_dir: str, out: Optional[str] = None) -> Path:
    checkpoints = load_checkpoints(Path(checkpoints_dir))
    holdout = PairDataset.load(Path(holdout_dir))
    originals = [original for original, _ in holdout.pairs]
    teacher = [augmented for _, augmented in holdout.pairs]
    best = select_checkpoint(checkpoints, teacher, originals)

    table = Table(title="Checkpoint Selection")
    table.add_column("Epoch", justify="right")
    table.add_column("Training MSE", justify="right")
    table.add_column("FD to teacher", justify="right")
    for checkpoint in checkpoints:
        style = "bold green" if checkpoint.epoch == best.epoch else None
        table.add_row(str(checkpoint.epoch), f"{checkpoint.mse:.3e}", f"{checkpoint.fd_to_teacher:.6f}",
                      style=style)
    console.print(table)

    target = Path(out) if out else Path(checkpoints_dir) / "best.json"
    best.save(target)
    console.print(f"[bold green]✓[/bold green] Epoch {best.epoch} saved to {target}")
    return target


def _drive(world: World, n: int, stride: int = 5) -> List[Frame]:
    """Clean frames from a pure-pursuit drive, every `stride` steps."""
    agent = build_agent(AgentSpec())
    frames = []
    while len(frames) < n:
        frame = world.render()
        if world.step_index % stride == 0:
            frames.append(frame)
        world.advance(agent.act(frame))
    return frames


def cmd_domains_score(scenario_path: str, strategies: Sequence[str], domains: Sequence[str],
                      n: int, out: str, k: int = 16, seed: int = 0) -> Dict[str, List[DomainScore]]:
    """Fit the distance model on clean frames and score each domain's augmented frames per strategy."""
    _, world, _ = _world_and_agent(scenario_path)
    with console.status("[bold yellow]Collecting nominal frames...[/bold yellow]"):
        frames = _drive(world, n)
        model = fit_distance_model([f.front.image for f in frames], k)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results: Dict[str, List[DomainScore]] = {}
    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"),
                  console=console, transient=True) as progress:
        for strategy in strategies:
            scores = []
            for name in domains:
                task = progress.add_task(f"Scoring {name} ({strategy})", total=None)
                augmenter = _mock_augmenter(strategy, name)
                images = []
                for frame in frames:
                    params = AugmentParams(seed=derive_seed(seed, frame.step))
                    images.append(augmenter.augment(frame, params).images[0])
                error, count = mean_error(model, images)
                scores.append(DomainScore(domain=name, mean_error=error, n_samples=count, strategy=strategy))
                progress.remove_task(task)
            results[strategy] = scores
            groups = categorize_domains(scores) if len(scores) >= 3 else {}
            path = write_scores_csv(out_dir / f"scores-{strategy}.csv", scores, groups)
            console.print(f"[bold green]✓[/bold green] {path}")
    return results


def cmd_domains_categorize(score_files: Sequence[str], out: Optional[str] = None):
    by_strategy: Dict[str, List[DomainScore]] = {}
    for path in score_files:
        scores = read_scores_csv(Path(path))
        strategy = scores[0].strategy if scores and scores[0].strategy else Path(path).stem
        by_strategy[strategy] = scores
    rows = strategy_agreement(by_strategy)

    table = Table(title="Domain Categories")
    table.add_column("Domain", style="cyan")
    for strategy in by_strategy:
        table.add_column(strategy, style="magenta")
    table.add_column("Consistent", justify="center")
    for row in rows:
        table.add_row(row.domain, *(row.groups[s] or "-" for s in by_strategy),
                      "[green]yes[/green]" if row.consistent else "[red]no[/red]")
    console.print(table)
    if out:
        write_agreement_csv(Path(out), rows)
        console.print(f"[bold green]✓[/bold green] Wrote {out}")
    return rows


def cmd_validator_calibrate(scenario_path: str, n: int = 150, seed: int = 0,
                            out: Optional[str] = None) -> CalibrationReport:
    scenario = load_scenario(Path(scenario_path))
    with console.status(f"[bold yellow]Rendering {n} calibration masks...[/bold yellow]"):
        labeled = collect_calibration_set(scenario.build_track(), n, seed)
        report = calibrate_threshold(labeled)
    display_calibration(report)
    if out:
        Path(out).write_text(report.model_dump_json(indent=2), encoding="utf-8")
        console.print(f"[bold green]✓[/bold green] Wrote {out}")
    return report


def cmd_validator_eval(dataset_dir: str, threshold: Optional[float] = None,
                       domain: Optional[str] = None) -> ConfusionMatrix:
    dataset = Dataset(Path(dataset_dir))
    cfg = _validator_for(domain or dataset.manifest.domain, threshold)
    outcomes = []
    for sample in dataset:
        if sample.augmented is None or sample.entry.gt_valid is None:
            continue
        frame = Frame(step=sample.entry.index, views=(View("front", sample.image, sample.mask),))
        verdict = validate(frame, [sample.augmented], cfg)
        outcomes.append((verdict.valid, sample.entry.gt_valid))
    matrix = evaluate_validator(outcomes)
    display_confusion(matrix)
    return matrix


def cmd_serve(listen: str, latency_ms: float = 0.0, agent: Optional[str] = None):
    host, sep, port = listen.rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"Invalid listen address '{listen}', expected host:port")
    spec = AgentSpec(kind=agent) if agent else None
    server = ReferenceServer(host or None, int(port), latency_ms=latency_ms, agent_spec=spec)
    console.print(Panel(f"[bold cyan]Reference server[/bold cyan] on {listen}\n"
                        f"Injected latency: {latency_ms:.0f} ms\n"
                        f"Agent: {agent or 'none'}\n\n[dim]Press Ctrl+C to stop[/dim]",
                        border_style="green"))
    try:
        asyncio.run(server.serve_forever())
    except KeyboardInterrupt:
        console.print("\n[bold yellow]Server stopped[/bold yellow]")


def cmd_report(logs_dir: str, out: str, baseline: Optional[str] = None) -> List[RunReport]:
    root = Path(logs_dir)
    if not root.is_dir():
        raise ConfigError(f"Logs directory not found: {logs_dir}")
    base_log = base_sha = None
    if baseline:
        base_path = run_log_path(Path(baseline))
        base_log = read_run_log(base_path)
        base_sha = baseline_sha256(base_path)
    run_dirs = sorted(p.parent for p in root.rglob(RUN_LOG_NAME))
    if not run_dirs:
        raise AdsTestError(f"No {RUN_LOG_NAME} under {logs_dir}")

    reports = []
    for run_dir in run_dirs:
        log = read_run_log(run_dir)
        use_baseline = base_log if base_log is not None and log.meta.strategy != "none" else None
        name = run_dir.name if run_dir == root else str(run_dir.relative_to(root))
        reports.append(build_report(log, use_baseline, name=name, baseline_sha256=base_sha))
    write_reports_csv(Path(out), reports)
    display_reports(reports)
    console.print(f"[bold green]✓[/bold green] Wrote {len(reports)} reports to {out}")
    return reports
