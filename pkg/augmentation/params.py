from dataclasses import dataclass, field
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config import config
from core.types import Image

Strategy = Literal["instruction", "inpaint", "refine"]
CampaignStrategy = Literal["none", "instruction", "inpaint", "refine", "student", "remote"]

MAX_SEED = 2 ** 64 - 1


class AugmentParams(BaseModel):
    """Backend knobs. Defaults follow the calibrated settings in config.augment."""

    model_config = ConfigDict(extra="forbid")

    text_guidance: float = Field(default_factory=lambda: config.augment.text_guidance, ge=0)
    image_guidance: float = Field(default_factory=lambda: config.augment.image_guidance, ge=0)
    noise_level: float = Field(default_factory=lambda: config.augment.noise_level, ge=0, le=1)
    # None means the per-strategy default from config
    corrupt_base_prob: Optional[float] = Field(default=None, ge=0, le=1)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)

    def base_prob(self, strategy: str) -> float:
        if self.corrupt_base_prob is not None:
            return self.corrupt_base_prob
        return config.augment.corrupt_base_prob.get(strategy, 0.0)

    def with_seed(self, seed: int) -> "AugmentParams":
        return self.model_copy(update={"seed": int(seed)})


@dataclass
class AugmentationResult:
    images: List[Image]
    elapsed_ms: float
    seed_used: int
    retries: int = 0
    # Ground truth attached by the mock backends only
    gt_valid: Optional[bool] = None
    fallback: bool = False
    strategy: str = ""
    # Part of elapsed_ms spent validating (validated loop only)
    validate_ms: float = 0.0
    # Server-side elapsed for remote backends
    server_elapsed_ms: Optional[float] = None
    attempts_ms: List[float] = field(default_factory=list)


def derive_seed(seed: int, *keys: int) -> int:
    """Stable 64-bit seed for a sub-stream (e.g. one simulation step) of a run seed."""
    state = np.random.SeedSequence([int(seed), *[int(k) for k in keys]]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
