"""Scenario files (TOML): track geometry, scene objects and run length."""

import tomllib
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from config import config
from core.types import DEFAULT_PALETTE, Palette, URBAN_HEIGHT, URBAN_WIDTH
from errors import ConfigError, TrackError
from .render import Camera, FRONT_VIEW, Renderer, URBAN_VIEWS
from .scene import Scene, SceneObject
from .track import TrackModel, default_segments, segment_from_spec
from .world import World


class SegmentSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["straight", "arc"]
    length: Optional[float] = None
    angle_deg: Optional[float] = None
    radius: Optional[float] = None


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "default"
    mode: Literal["default", "urban"] = "default"
    seed: int = 0
    n_steps: int = Field(default_factory=lambda: config.sim.n_steps, ge=1)
    lane_width: float = Field(default=4.0, gt=0)
    n_sectors: int = Field(default=40, ge=1)
    start_speed: float = Field(default=5.0, ge=0)
    # Route length for route completion; one lap when unset
    route_length: Optional[float] = Field(default=None, gt=0)
    tick_ms: float = Field(default=0.0, ge=0)
    frame_height: Optional[int] = Field(default=None, ge=1)
    frame_width: Optional[int] = Field(default=None, ge=1)
    # Empty means the built-in default track
    segments: List[SegmentSpec] = Field(default_factory=list)
    objects: List[SceneObject] = Field(default_factory=list)

    @property
    def urban(self) -> bool:
        return self.mode == "urban"

    def build_track(self) -> TrackModel:
        if self.segments:
            segments = [segment_from_spec(s.kind, s.length, s.angle_deg, s.radius) for s in self.segments]
        else:
            segments = default_segments()
        return TrackModel(segments, lane_width=self.lane_width, n_sectors=self.n_sectors)

    def camera(self) -> Camera:
        if self.urban:
            height, width = URBAN_HEIGHT, URBAN_WIDTH
        else:
            height, width = config.sim.frame_height, config.sim.frame_width
        return Camera(height=self.frame_height or height, width=self.frame_width or width)

    def build_world(self, palette: Palette = DEFAULT_PALETTE) -> World:
        track = self.build_track()
        scene = Scene(objects=self.objects)
        try:
            scene.validate_against(track.total_length)
        except ValueError as e:
            raise TrackError(str(e)) from e
        views = URBAN_VIEWS if self.urban else FRONT_VIEW
        renderer = Renderer(track, scene, self.camera(), palette, views)
        return World(track, scene, renderer, start_speed=self.start_speed,
                     urban=self.urban, tick_ms=self.tick_ms)


def load_scenario(path: Path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Scenario file not found: {path}")
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
        return ScenarioConfig.model_validate(data)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid TOML in {path}: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"Invalid scenario {path}: {e}") from e
