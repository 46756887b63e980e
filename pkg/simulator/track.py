"""Closed centreline track built from straights and constant-curvature arcs.

World frame is the raster frame: x grows east, y grows south, heading grows
clockwise on screen. Positive curvature is a right turn. Lateral offsets are
positive to the left of the direction of travel.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import TrackError

CLOSURE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Segment:
    length: float
    curvature: float = 0.0

    @classmethod
    def straight(cls, length: float) -> "Segment":
        return cls(length=length, curvature=0.0)

    @classmethod
    def arc(cls, angle_deg: float, radius: float) -> "Segment":
        """Arc turning `angle_deg` degrees (positive = right turn) on `radius` metres."""
        if radius <= 0:
            raise TrackError(f"Arc radius must be positive, got {radius}")
        angle = math.radians(angle_deg)
        return cls(length=abs(angle) * radius, curvature=math.copysign(1.0 / radius, angle))

    @property
    def is_arc(self) -> bool:
        return self.curvature != 0.0


@dataclass(frozen=True)
class _Placed:
    segment: Segment
    s0: float
    x0: float
    y0: float
    heading0: float

    def pose(self, u: float) -> Tuple[float, float, float]:
        k = self.segment.curvature
        if k == 0.0:
            return (self.x0 + u * math.cos(self.heading0),
                    self.y0 + u * math.sin(self.heading0),
                    self.heading0)
        cx, cy = self.center
        heading = self.heading0 + k * u
        return cx + math.sin(heading) / k, cy - math.cos(heading) / k, heading

    @property
    def center(self) -> Tuple[float, float]:
        k = self.segment.curvature
        return (self.x0 - math.sin(self.heading0) / k,
                self.y0 + math.cos(self.heading0) / k)

    def project(self, px: np.ndarray, py: np.ndarray):
        """Nearest point on this segment for each query point.

        Returns (u, distance squared, cte, heading) arrays.
        """
        length = self.segment.length
        k = self.segment.curvature
        if k == 0.0:
            c, s = math.cos(self.heading0), math.sin(self.heading0)
            dx, dy = px - self.x0, py - self.y0
            u = np.clip(dx * c + dy * s, 0.0, length)
            rx, ry = dx - u * c, dy - u * s
            heading = np.full_like(u, self.heading0)
        else:
            cx, cy = self.center
            wx, wy = px - cx, py - cy
            theta = np.arctan2(k * wx, -k * wy)
            mid = 0.5 * k * length
            delta = theta - self.heading0 - mid
            delta = (delta + math.pi) % (2.0 * math.pi) - math.pi + mid
            u = np.clip(delta / k, 0.0, length)
            heading = self.heading0 + k * u
            rx = px - (cx + np.sin(heading) / k)
            ry = py - (cy - np.cos(heading) / k)
        # Left normal is (sin h, -cos h) in the raster frame
        cte = rx * np.sin(heading) - ry * np.cos(heading)
        return u, rx * rx + ry * ry, cte, heading


class TrackModel:
    """Ordered straights and arcs forming a closed loop starting at the origin heading east."""

    def __init__(self, segments: Sequence[Segment], lane_width: float = 4.0, n_sectors: int = 40,
                 start: Tuple[float, float, float] = (0.0, 0.0, 0.0)):
        if not segments:
            raise TrackError("Track needs at least one segment")
        if lane_width <= 0:
            raise TrackError(f"lane_width must be positive, got {lane_width}")
        if n_sectors < 1:
            raise TrackError(f"n_sectors must be >= 1, got {n_sectors}")
        for seg in segments:
            if seg.length <= 0:
                raise TrackError(f"Segment length must be positive, got {seg.length}")

        self.segments: List[Segment] = list(segments)
        self.lane_width = float(lane_width)
        self.n_sectors = int(n_sectors)
        self._placed: List[_Placed] = []

        x, y, heading = start
        s = 0.0
        for seg in self.segments:
            placed = _Placed(seg, s, x, y, heading)
            self._placed.append(placed)
            x, y, heading = placed.pose(seg.length)
            s += seg.length
        self.total_length = s

        sx, sy, sh = start
        gap = math.hypot(x - sx, y - sy)
        turn = math.remainder(heading - sh, 2.0 * math.pi)
        if gap > CLOSURE_TOLERANCE or abs(turn) > CLOSURE_TOLERANCE:
            raise TrackError(f"Track does not close: end pose is {gap:.3g} m and "
                             f"{turn:.3g} rad away from the start pose")
        self._starts = np.array([p.s0 for p in self._placed])

    def _segment_at(self, s: float) -> Tuple[_Placed, float]:
        s = s % self.total_length
        idx = int(np.searchsorted(self._starts, s, side="right")) - 1
        placed = self._placed[max(idx, 0)]
        return placed, s - placed.s0

    def pose_at(self, s: float) -> Tuple[float, float, float]:
        """(x, y, heading) of the centreline at arclength s (wrapped)."""
        placed, u = self._segment_at(s)
        return placed.pose(u)

    def curvature_at(self, s: float) -> float:
        placed, _ = self._segment_at(s)
        return placed.segment.curvature

    def sector_of(self, s: float) -> int:
        s = s % self.total_length
        return min(int(math.floor(self.n_sectors * s / self.total_length)), self.n_sectors - 1)

    def project_many(self, xs, ys):
        """Vectorised projection: returns (s, cte, centreline heading, distance)."""
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        best_d2 = np.full(xs.shape, np.inf)
        best_s = np.zeros(xs.shape)
        best_cte = np.zeros(xs.shape)
        best_heading = np.zeros(xs.shape)
        for placed in self._placed:
            u, d2, cte, heading = placed.project(xs, ys)
            closer = d2 < best_d2
            best_d2 = np.where(closer, d2, best_d2)
            best_s = np.where(closer, placed.s0 + u, best_s)
            best_cte = np.where(closer, cte, best_cte)
            best_heading = np.where(closer, heading, best_heading)
        best_s = np.mod(best_s, self.total_length)
        return best_s, best_cte, best_heading, np.sqrt(best_d2)

    def project_to_centerline(self, x: float, y: float, strict: bool = True) -> Tuple[float, float]:
        """Arclength and signed lateral offset (left positive) of the nearest centreline point."""
        s, cte, _, dist = self.project_many(np.array([x]), np.array([y]))
        if strict and dist[0] > 10.0 * self.lane_width:
            raise TrackError(f"Point ({x:.2f}, {y:.2f}) is {dist[0]:.2f} m from the track, "
                             f"limit is {10.0 * self.lane_width:.2f} m")
        return float(s[0]), float(cte[0])

    def __repr__(self) -> str:
        return (f"TrackModel({len(self.segments)} segments, length={self.total_length:.2f} m, "
                f"lane_width={self.lane_width}, n_sectors={self.n_sectors})")


# Bottom straights of the default track; the chicane straight closes the loop exactly
_APPROACH = 15.0
_CHICANE_RADIUS = 40.0
_CHICANE_STRAIGHT = 160.0 - 2 * _APPROACH - 4 * _CHICANE_RADIUS * math.sin(math.pi / 4)


def default_segments() -> List[Segment]:
    return [
        Segment.straight(80.0),
        Segment.arc(90.0, 30.0),
        Segment.straight(40.0),
        Segment.arc(90.0, 30.0),
        Segment.straight(_APPROACH),
        Segment.arc(-45.0, _CHICANE_RADIUS),
        Segment.arc(45.0, _CHICANE_RADIUS),
        Segment.straight(_CHICANE_STRAIGHT),
        Segment.arc(45.0, _CHICANE_RADIUS),
        Segment.arc(-45.0, _CHICANE_RADIUS),
        Segment.straight(_APPROACH),
        Segment.arc(90.0, 30.0),
        Segment.straight(40.0),
        Segment.arc(90.0, 30.0),
        Segment.straight(80.0),
    ]


def default_track(lane_width: float = 4.0, n_sectors: int = 40) -> TrackModel:
    """Rounded rectangle with a chicane on the bottom side (left and right bends)."""
    return TrackModel(default_segments(), lane_width=lane_width, n_sectors=n_sectors)


def segment_from_spec(kind: str, length: Optional[float] = None, angle_deg: Optional[float] = None,
                      radius: Optional[float] = None) -> Segment:
    if kind == "straight":
        if length is None:
            raise TrackError("Straight segment needs a length")
        return Segment.straight(length)
    if kind == "arc":
        if angle_deg is None or radius is None:
            raise TrackError("Arc segment needs angle_deg and radius")
        return Segment.arc(angle_deg, radius)
    raise TrackError(f"Unknown segment kind '{kind}'")
