import argparse
import logging
import sys
from typing import List, Optional

from rich.logging import RichHandler

from augmentation.domains import get_all_domains
from cli import (
    cmd_baseline,
    cmd_distill_collect,
    cmd_distill_fit,
    cmd_distill_select,
    cmd_domains_categorize,
    cmd_domains_score,
    cmd_report,
    cmd_run,
    cmd_serve,
    cmd_validator_calibrate,
    cmd_validator_eval,
    console,
    display_domains,
)
from config import config
from errors import AdsTestError, ConfigError

logger = logging.getLogger("adstest")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def setup_logging(debug: bool) -> None:
    level = logging.DEBUG if debug else getattr(logging, config.log.level, logging.INFO)
    logger.handlers.clear()
    logger.addHandler(RichHandler(console=console, show_path=debug, markup=False))
    logger.setLevel(level)
    logger.propagate = False


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="adstest",
        description="Closed-loop ODD testing of lane-keeping agents with validated image augmentation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Show the ODD domain catalogue
  adstest domains list

  # Record the nominal baseline for a campaign's agent, scenario and seed
  adstest baseline --config campaigns/nominal.toml

  # Run a campaign against that baseline
  adstest run --config campaigns/night-refine.toml --baseline runs/nominal

  # Collect 200 validated pairs and distill a student augmenter
  adstest distill collect --scenario scenarios/default.toml --domain night --strategy refine --n 200 --out pairs/night
  adstest distill fit --pairs pairs/night --out checkpoints/night
  adstest distill select --checkpoints checkpoints/night --holdout pairs/night-holdout

  # Score domains by distance from the nominal domain and compare strategies
  adstest domains score --scenario scenarios/default.toml --out scores
  adstest domains categorize --scores scores/scores-instruction.csv scores/scores-refine.csv --out groups.csv

  # Calibrate the validator threshold and evaluate it on a labelled dataset
  adstest validator calibrate --scenario scenarios/default.toml --n 150
  adstest validator eval --dataset labelled/night-instruction --threshold 0.9

  # Serve the reference augmentation backend with 50 ms injected latency
  adstest serve --listen 127.0.0.1:8765 --latency-ms 50

  # Aggregate every run under runs/ into one CSV
  adstest report --logs runs --out report.csv
        """
    )

    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    run = subparsers.add_parser('run', help='Run a test campaign')
    run.add_argument('--config', required=True, help='Campaign TOML file')
    run.add_argument('--baseline', help='Nominal run directory (or run.jsonl) to compare against')
    run.add_argument('--steps', type=int, help="Override the scenario's number of steps")
    run.add_argument('--no-progress', action='store_true', help='Hide the progress bar')

    baseline = subparsers.add_parser('baseline', help='Record (or reuse) the nominal baseline of a campaign')
    baseline.add_argument('--config', required=True, help='Campaign TOML file with strategy "none"')
    baseline.add_argument('--force', action='store_true', help='Re-record even if a verified baseline exists')
    baseline.add_argument('--no-progress', action='store_true', help='Hide the progress bar')

    distill = subparsers.add_parser('distill', help='Distill a fast student augmenter')
    distill_sub = distill.add_subparsers(dest='action', required=True)

    collect = distill_sub.add_parser('collect', help='Collect (original, augmented) pairs')
    collect.add_argument('--scenario', required=True, help='Scenario TOML file')
    collect.add_argument('--domain', required=True, help='Target domain name')
    collect.add_argument('--strategy', default='refine', choices=['instruction', 'inpaint', 'refine'])
    collect.add_argument('--n', type=int, default=config.distill.n_pairs, help='Number of pairs')
    collect.add_argument('--out', required=True, help='Output dataset directory')
    collect.add_argument('--seed', type=int, default=0)
    collect.add_argument('--stride', type=int, default=1, help='Augment every N-th step')
    collect.add_argument('--unfiltered', action='store_true',
                         help='Keep every attempt with its ground-truth validity label')
    collect.add_argument('--corrupt-prob', type=float, help='Override the backend corruption probability')
    collect.add_argument('--noise-level', type=float, help='Override the refine noise level')

    fit = distill_sub.add_parser('fit', help='Fit the student and write one checkpoint per epoch')
    fit.add_argument('--pairs', required=True, help='Pair dataset directory')
    fit.add_argument('--out', required=True, help='Checkpoint directory')
    fit.add_argument('--epochs', type=int, help=f'Number of epochs (default {config.distill.epochs})')
    fit.add_argument('--seed', type=int, default=0)

    select = distill_sub.add_parser('select', help='Pick the checkpoint closest to the teacher in FD')
    select.add_argument('--checkpoints', required=True, help='Checkpoint directory')
    select.add_argument('--holdout', required=True, help='Held-out pair dataset directory')
    select.add_argument('--out', help='Where to write the chosen checkpoint (default <checkpoints>/best.json)')

    domains = subparsers.add_parser('domains', help='ODD domain catalogue and distance categories')
    domains_sub = domains.add_subparsers(dest='action', required=True)
    domains_sub.add_parser('list', help='Show the domain catalogue')

    score = domains_sub.add_parser('score', help='Score augmented domains by reconstruction error')
    score.add_argument('--scenario', required=True, help='Scenario TOML file')
    score.add_argument('--strategies', nargs='+', default=['instruction', 'inpaint', 'refine'])
    score.add_argument('--domains', nargs='+', help='Domain names (default: the whole catalogue)')
    score.add_argument('--n', type=int, default=200, help='Number of nominal frames')
    score.add_argument('--k', type=int, default=16, help='Principal components kept')
    score.add_argument('--seed', type=int, default=0)
    score.add_argument('--out', required=True, help='Output directory for scores-<strategy>.csv')

    categorize = domains_sub.add_parser('categorize', help='Group domains into distance tertiles')
    categorize.add_argument('--scores', nargs='+', required=True, help='Score CSV files, one per strategy')
    categorize.add_argument('--out', help='Agreement CSV to write')

    validator = subparsers.add_parser('validator', help='Semantic validator tools')
    validator_sub = validator.add_subparsers(dest='action', required=True)

    calibrate = validator_sub.add_parser('calibrate', help='Calibrate the OC-TSS threshold')
    calibrate.add_argument('--scenario', required=True, help='Scenario TOML file')
    calibrate.add_argument('--n', type=int, default=150, help='Number of ground-truth masks')
    calibrate.add_argument('--seed', type=int, default=0)
    calibrate.add_argument('--out', help='Calibration report JSON to write')

    evaluate = validator_sub.add_parser('eval', help='Confusion matrix on a labelled dataset')
    evaluate.add_argument('--dataset', required=True, help='Dataset collected with --unfiltered')
    evaluate.add_argument('--threshold', type=float, help=f'Threshold (default {config.validator.threshold})')
    evaluate.add_argument('--domain', help="Domain for the validator's segmenter (default: from the manifest)")

    serve = subparsers.add_parser('serve', help='Serve the reference augmentation backend')
    serve.add_argument('--listen', default=f"{config.server.host}:{config.server.port}", help='host:port')
    serve.add_argument('--latency-ms', type=float, default=0.0, help='Latency added to every reply')
    serve.add_argument('--agent', choices=['pure_pursuit_mask', 'brightness_fragile'],
                       help='Also host an agent backend')

    report = subparsers.add_parser('report', help='Aggregate run logs into a CSV report')
    report.add_argument('--logs', required=True, help='Directory searched for run.jsonl files')
    report.add_argument('--out', required=True, help='CSV file to write')
    report.add_argument('--baseline', help='Nominal run for RCTE, RSJ and overhead')

    subparsers.add_parser('help', help='Show this help message')
    return parser


def dispatch(args: argparse.Namespace) -> None:
    if args.command == 'run':
        cmd_run(args.config, args.baseline, args.steps, progress=not args.no_progress)

    if args.command == 'baseline':
        cmd_baseline(args.config, args.force, progress=not args.no_progress)

    if args.command == 'distill':
        if args.action == 'collect':
            cmd_distill_collect(args.scenario, args.domain, args.strategy, args.n, args.out,
                                seed=args.seed, stride=args.stride, unfiltered=args.unfiltered,
                                corrupt_prob=args.corrupt_prob, noise_level=args.noise_level)
        elif args.action == 'fit':
            cmd_distill_fit(args.pairs, args.out, args.epochs, args.seed)
        elif args.action == 'select':
            cmd_distill_select(args.checkpoints, args.holdout, args.out)

    if args.command == 'domains':
        if args.action == 'list':
            display_domains()
        elif args.action == 'score':
            names = args.domains or [d.name for d in get_all_domains()]
            cmd_domains_score(args.scenario, args.strategies, names, args.n, args.out, k=args.k, seed=args.seed)
        elif args.action == 'categorize':
            cmd_domains_categorize(args.scores, args.out)

    if args.command == 'validator':
        if args.action == 'calibrate':
            cmd_validator_calibrate(args.scenario, args.n, args.seed, args.out)
        elif args.action == 'eval':
            cmd_validator_eval(args.dataset, args.threshold, args.domain)

    if args.command == 'serve':
        cmd_serve(args.listen, args.latency_ms, args.agent)

    if args.command == 'report':
        cmd_report(args.logs, args.out, args.baseline)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    config.debug = args.debug
    setup_logging(args.debug)

    if not args.command or args.command == 'help':
        parser.print_help()
        return EXIT_OK

    try:
        dispatch(args)
    except ConfigError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        return EXIT_USAGE
    except AdsTestError as e:
        console.print(f"[bold red]Failed:[/bold red] {e}")
        if config.debug:
            console.print_exception()
        return EXIT_FAILURE
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        return EXIT_FAILURE
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
