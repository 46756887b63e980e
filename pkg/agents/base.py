from abc import ABC, abstractmethod
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import config
from core.types import Frame
from simulator.vehicle import ControlCommand

AgentKind = Literal["pure_pursuit_mask", "brightness_fragile", "remote"]

# Lookahead band as a fraction of image height (rows 95..105 of a 160-row frame)
DEFAULT_BAND = (95 / 160, 105 / 160)


class AgentSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: AgentKind = "pure_pursuit_mask"
    gain: float = Field(default=0.625, gt=0)
    throttle: float = Field(default=0.5, ge=0, le=1)
    # Inclusive row band; scaled from DEFAULT_BAND when unset
    lookahead_rows: Optional[Tuple[int, int]] = None
    brightness_threshold: float = Field(default=110.0, ge=0, le=255)
    min_road_fraction: float = Field(default=0.05, ge=0, le=1)
    endpoint: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.lookahead_rows is not None:
            lo, hi = self.lookahead_rows
            if lo < 0 or hi < lo:
                raise ValueError(f"Invalid lookahead_rows {self.lookahead_rows}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote agent needs an endpoint (host:port)")
        return self


class Agent(ABC):
    """Image-consuming controller. Sees only the camera images of a frame."""

    name: str = "agent"

    def __init__(self, spec: AgentSpec):
        self.spec = spec
        self.steering_limit = config.sim.steering_limit
        self.previous_steering = 0.0

    @abstractmethod
    def act(self, frame: Frame) -> ControlCommand:
        ...

    def reset(self) -> None:
        self.previous_steering = 0.0

    def close(self) -> None:
        pass

    def band(self, height: int) -> Tuple[int, int]:
        if self.spec.lookahead_rows is not None:
            lo, hi = self.spec.lookahead_rows
        else:
            lo, hi = int(round(DEFAULT_BAND[0] * height)), int(round(DEFAULT_BAND[1] * height))
        if hi >= height:
            raise ValueError(f"Lookahead band {lo}..{hi} outside a {height}-row frame")
        return lo, hi

    def steer_from(self, road: np.ndarray) -> ControlCommand:
        """Steer toward the road-pixel centroid of a boolean band (rows x columns).

        Holds the previous steering when the band has no road.
        """
        width = road.shape[1]
        cols = np.nonzero(road)[1]
        if cols.size == 0:
            steering = self.previous_steering
        else:
            centroid = cols.mean() + 0.5
            steering = self.spec.gain * (2.0 * centroid / width - 1.0)
            steering = float(np.clip(steering, -self.steering_limit, self.steering_limit))
        self.previous_steering = steering
        return ControlCommand(steering_target=steering, throttle=self.spec.throttle)
