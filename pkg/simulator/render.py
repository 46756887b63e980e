"""Top-down scanline camera.

Each image row samples the ground along the view's optical axis, from `near`
metres (bottom row) to `far` metres (top row); each column is a lateral offset
from that axis, right positive. A ground point is classified in track
coordinates, so the image is painted straight from the mask.
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from core.types import ClassId, DEFAULT_PALETTE, Frame, Palette, SemanticMask, View
from .scene import ObjectKind, Scene
from .track import TrackModel
from .vehicle import VehicleState

# Zone markers stand beside the right lane edge, over the first metre of the zone
MARKER_GAP = 1.5
MARKER_WIDTH = 1.0
MARKER_DEPTH = 1.0

FRONT_VIEW: Tuple[Tuple[str, float], ...] = (("front", 0.0),)
URBAN_VIEWS: Tuple[Tuple[str, float], ...] = (
    ("front", 0.0),
    ("left", -math.pi / 4),
    ("right", math.pi / 4),
)


@dataclass(frozen=True)
class Camera:
    height: int = 160
    width: int = 320
    near: float = 2.0
    far: float = 18.0
    # Lateral field of view in metres across the full image width
    span: float = 16.0

    @property
    def row_distances(self) -> np.ndarray:
        rows = np.arange(self.height)
        return self.near + (self.height - 1 - rows) * (self.far - self.near) / self.height

    @property
    def column_offsets(self) -> np.ndarray:
        cols = np.arange(self.width)
        return (cols - (self.width - 1) / 2.0) * self.span / self.width


class Renderer:
    def __init__(self, track: TrackModel, scene: Scene, camera: Camera = Camera(),
                 palette: Palette = DEFAULT_PALETTE,
                 views: Sequence[Tuple[str, float]] = FRONT_VIEW):
        self.track = track
        self.scene = scene
        self.camera = camera
        self.palette = palette
        self.views = tuple(views)
        self._lut = palette.lookup_table()
        self._declared = [int(c) for c in palette.class_ids]
        self._distances = camera.row_distances
        self._offsets = camera.column_offsets

    def _classify(self, state: VehicleState, yaw: float) -> np.ndarray:
        axis = state.heading + yaw
        xs = state.x + self._distances * math.cos(axis)
        ys = state.y + self._distances * math.sin(axis)
        s_row, cte_row, track_heading, _ = self.track.project_many(xs, ys)
        phi = (track_heading - axis)[:, None]
        t = self._offsets[None, :]
        along = s_row[:, None] + t * np.sin(phi)
        lateral = cte_row[:, None] - t * np.cos(phi)

        classes = np.full((self.camera.height, self.camera.width), int(ClassId.BACKGROUND), dtype=np.uint8)
        classes[np.abs(lateral) <= self.track.lane_width / 2.0] = int(ClassId.ROAD)

        total = self.track.total_length
        for obj in self.scene.objects:
            if obj.kind == ObjectKind.OBSTACLE:
                s0, depth = obj.s_start, obj.s_end - obj.s_start
                lo, hi = obj.lateral - obj.width / 2.0, obj.lateral + obj.width / 2.0
            else:
                s0, depth = obj.s_start, min(MARKER_DEPTH, obj.s_end - obj.s_start)
                centre = -(self.track.lane_width / 2.0 + MARKER_GAP)
                lo, hi = centre - MARKER_WIDTH / 2.0, centre + MARKER_WIDTH / 2.0
            inside = (np.mod(along - s0, total) <= depth) & (lateral >= lo) & (lateral <= hi)
            classes[inside] = int(obj.class_id)
        return classes

    def render(self, state: VehicleState, step: int = 0) -> Frame:
        views = []
        for name, yaw in self.views:
            classes = self._classify(state, yaw)
            mask = SemanticMask(classes, self._declared)
            image = self.palette.paint(mask)
            views.append(View(name=name, image=image, mask=mask))
        return Frame(step=step, views=tuple(views), state=state)
