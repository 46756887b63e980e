"""
adstest CLI Package

This package contains the command-line interface of the closed-loop ODD
testing harness. It provides commands for:
- Running test campaigns and recording nominal baselines
- Collecting augmentation pairs and distilling a student augmenter
- Scoring and categorizing ODD domains by distance from the nominal domain
- Calibrating and evaluating the semantic validator
- Serving the reference augmentation backend
- Aggregating run logs into failure, urban and overhead reports

The commands are implemented in the commands.py module.
"""

from .commands import (
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
