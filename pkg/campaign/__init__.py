from .config import CampaignConfig, ValidatorOptions, load_campaign
from .runner import StepTrace, prepare, record_baseline, run_campaign, run_step

__all__ = [
    "CampaignConfig",
    "ValidatorOptions",
    "load_campaign",
    "StepTrace",
    "prepare",
    "record_baseline",
    "run_campaign",
    "run_step",
]
