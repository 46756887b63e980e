from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.types import ClassId


class ObjectKind(str, Enum):
    OBSTACLE = "obstacle"
    SIGNAL_ZONE = "signal_zone"
    STOP_ZONE = "stop_zone"


class EventKind(str, Enum):
    OOB = "oob"
    COLLISION = "collision"
    RED_LIGHT = "red_light"
    STOP_SIGN = "stop_sign"
    OFF_ROAD_URBAN = "off_road_urban"
    COLLISION_PEDESTRIAN = "collision_pedestrian"
    COLLISION_VEHICLE = "collision_vehicle"


class SceneObject(BaseModel):
    """Object laid out in track coordinates (arclength interval, lateral offset left positive)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ObjectKind
    s_start: float
    s_end: float
    lateral: float = 0.0
    width: float = 2.0
    # Obstacles only: pedestrian or vehicle
    object_class: str = "vehicle"
    # Signal zones only: red while step (modulo period, if set) is in [red_from, red_to)
    phase: Optional[Tuple[int, int]] = None
    period: Optional[int] = None

    @model_validator(mode="after")
    def _check(self):
        if not self.s_start < self.s_end:
            raise ValueError(f"s_start ({self.s_start}) must be below s_end ({self.s_end})")
        if self.s_start < 0:
            raise ValueError("s_start must be >= 0")
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.kind == ObjectKind.OBSTACLE and self.object_class not in ("pedestrian", "vehicle"):
            raise ValueError(f"object_class must be pedestrian or vehicle, got '{self.object_class}'")
        if self.kind == ObjectKind.SIGNAL_ZONE:
            if self.phase is None:
                raise ValueError("signal_zone needs a phase (red_from_step, red_to_step)")
            if self.phase[0] > self.phase[1]:
                raise ValueError("phase must satisfy red_from_step <= red_to_step")
        if self.period is not None and self.period < 1:
            raise ValueError("period must be >= 1")
        return self

    @property
    def class_id(self) -> ClassId:
        if self.kind == ObjectKind.SIGNAL_ZONE:
            return ClassId.TRAFFIC_LIGHT
        if self.kind == ObjectKind.STOP_ZONE:
            return ClassId.TRAFFIC_SIGN
        return ClassId.PEDESTRIAN if self.object_class == "pedestrian" else ClassId.VEHICLE

    def is_red(self, step: int) -> bool:
        if self.phase is None:
            return False
        t = step % self.period if self.period else step
        return self.phase[0] <= t < self.phase[1]


class Scene(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    objects: List[SceneObject] = Field(default_factory=list)

    def of_kind(self, kind: ObjectKind) -> List[SceneObject]:
        return [obj for obj in self.objects if obj.kind == kind]

    def validate_against(self, total_length: float) -> None:
        for obj in self.objects:
            if obj.s_end > total_length:
                raise ValueError(f"{obj.kind.value} interval [{obj.s_start}, {obj.s_end}] "
                                 f"exceeds track length {total_length:.2f}")


class MisbehaviorEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: EventKind
    step: int
    sector: int
    s: float
