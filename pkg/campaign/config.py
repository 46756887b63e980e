"""Campaign files (TOML).

Example:

    name = "night-refine"
    scenario = "../scenarios/default.toml"
    strategy = "refine"
    domain = "night"
    seed = 7
    output = "../runs/night-refine"
    baseline = "../runs/nominal"

    [agent]
    kind = "brightness_fragile"

    [params]
    noise_level = 0.6

    [validator]
    threshold = 0.9
    max_retries = 10

Relative paths resolve against the directory of the campaign file.
"""

import tomllib
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from agents.base import AgentSpec
from augmentation.params import AugmentParams, CampaignStrategy, Strategy
from config import config
from core.types import ClassId
from errors import ConfigError


class ValidatorOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    threshold: float = Field(default_factory=lambda: config.validator.threshold, ge=0, le=1)
    max_retries: int = Field(default_factory=lambda: config.validator.max_retries, ge=0)
    # Class labels; unset means road only, or every non-background class in urban scenarios
    checked_classes: Optional[List[str]] = None

    @model_validator(mode="after")
    def _labels(self):
        for label in self.checked_classes or []:
            ClassId.from_label(label)
        if self.checked_classes is not None and not self.checked_classes:
            raise ValueError("checked_classes must not be empty")
        return self


class CampaignConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "campaign"
    scenario: Path
    agent: AgentSpec = Field(default_factory=AgentSpec)
    strategy: CampaignStrategy = "none"
    domains: List[str] = Field(default_factory=list)
    params: AugmentParams = Field(default_factory=AugmentParams)
    validator: ValidatorOptions = Field(default_factory=ValidatorOptions)
    # Overrides the scenario's run length
    n_steps: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)
    output: Path = Path("runs")
    baseline: Optional[Path] = None
    baselines_dir: Optional[Path] = None
    checkpoint: Optional[Path] = None
    endpoint: Optional[str] = None
    # What the remote backend should run
    remote_strategy: Strategy = "instruction"
    preserved: Optional[List[str]] = None

    @model_validator(mode="before")
    @classmethod
    def _single_domain(cls, data):
        if isinstance(data, dict) and "domain" in data:
            data = dict(data)
            if "domains" in data:
                raise ValueError("give either domain or domains, not both")
            data["domains"] = [data.pop("domain")]
        return data

    @model_validator(mode="after")
    def _check(self):
        if self.strategy != "none" and not self.domains:
            raise ValueError(f"strategy '{self.strategy}' needs a domain")
        if self.strategy == "student" and self.checkpoint is None:
            raise ValueError("strategy 'student' needs a checkpoint path")
        if self.strategy == "remote" and not self.endpoint:
            raise ValueError("strategy 'remote' needs an endpoint (host:port)")
        for label in self.preserved or []:
            ClassId.from_label(label)
        return self

    @property
    def domain(self) -> Optional[str]:
        return self.domains[0] if self.domains else None

    def for_domain(self, domain: str) -> "CampaignConfig":
        """Single-domain copy writing into its own output subdirectory."""
        output = self.output / domain if len(self.domains) > 1 else self.output
        return self.model_copy(update={"domains": [domain], "output": output})

    def resolve(self, base: Path) -> "CampaignConfig":
        def rel(p: Optional[Path]) -> Optional[Path]:
            return None if p is None or p.is_absolute() else base / p
        updates = {}
        for name in ("scenario", "output", "baseline", "baselines_dir", "checkpoint"):
            value = getattr(self, name)
            resolved = rel(value)
            if resolved is not None:
                updates[name] = resolved
        return self.model_copy(update=updates)

    def check_files(self) -> None:
        for name in ("scenario", "checkpoint", "baseline"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{name} path does not exist: {path}")


def load_campaign(path: Path) -> CampaignConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Campaign file not found: {path}")
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
        cfg = CampaignConfig.model_validate(data).resolve(path.parent)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid TOML in {path}: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"Invalid campaign {path}: {e}") from e
    cfg.check_files()
    return cfg
