import logging
from typing import Dict, List

import numpy as np

from config import SimulatorConfig, config
from .scene import EventKind, MisbehaviorEvent, ObjectKind, Scene, SceneObject
from .track import TrackModel
from .vehicle import VehicleState

logger = logging.getLogger("adstest")

# Below this speed the vehicle counts as stopped inside a stop zone
STOP_SPEED = 0.05


def _in_interval(s: float, obj: SceneObject, total: float) -> bool:
    return (s - obj.s_start) % total <= obj.s_end - obj.s_start


class EventDetector:
    """Turns consecutive vehicle states into misbehaviour events.

    Keeps per-zone memory for stop zones (lowest speed seen while inside).
    """

    def __init__(self, track: TrackModel, scene: Scene, urban: bool = False,
                 params: SimulatorConfig = config.sim):
        self.track = track
        self.scene = scene
        self.urban = urban
        self.radius = params.vehicle_radius
        self._stop_min_speed: Dict[int, float] = {}

    def _event(self, kind: EventKind, step: int, state: VehicleState) -> MisbehaviorEvent:
        return MisbehaviorEvent(kind=kind, step=step, sector=self.track.sector_of(state.s), s=state.s)

    def _overlaps(self, state: VehicleState, obj: SceneObject) -> bool:
        total = self.track.total_length
        # Distance from the vehicle centre to the obstacle box in (s, lateral) coordinates
        rel = (state.s - obj.s_start) % total
        depth = obj.s_end - obj.s_start
        if rel <= depth:
            ds = 0.0
        else:
            ds = min(rel - depth, total - rel)
        lo, hi = obj.lateral - obj.width / 2.0, obj.lateral + obj.width / 2.0
        dl = float(np.clip(state.cte, lo, hi)) - state.cte
        return ds * ds + dl * dl < self.radius * self.radius

    def detect(self, prev: VehicleState, state: VehicleState, step: int,
               suppressed: bool = False) -> List[MisbehaviorEvent]:
        """Events caused by moving from `prev` to `state` during `step`.

        Zone memory is updated even while events are suppressed.
        """
        events: List[MisbehaviorEvent] = []
        total = self.track.total_length

        if abs(state.cte) > self.track.lane_width / 2.0:
            kind = EventKind.OFF_ROAD_URBAN if self.urban else EventKind.OOB
            events.append(self._event(kind, step, state))

        for obj in self.scene.of_kind(ObjectKind.OBSTACLE):
            if self._overlaps(state, obj):
                if not self.urban:
                    kind = EventKind.COLLISION
                elif obj.object_class == "pedestrian":
                    kind = EventKind.COLLISION_PEDESTRIAN
                else:
                    kind = EventKind.COLLISION_VEHICLE
                events.append(self._event(kind, step, state))
                break

        for obj in self.scene.of_kind(ObjectKind.SIGNAL_ZONE):
            entered = _in_interval(state.s, obj, total) and not _in_interval(prev.s, obj, total)
            if entered and obj.is_red(step):
                events.append(self._event(EventKind.RED_LIGHT, step, state))

        for idx, obj in enumerate(self.scene.objects):
            if obj.kind != ObjectKind.STOP_ZONE:
                continue
            was_in = _in_interval(prev.s, obj, total)
            now_in = _in_interval(state.s, obj, total)
            if now_in:
                lowest = self._stop_min_speed.get(idx, np.inf)
                self._stop_min_speed[idx] = min(lowest, state.speed)
            elif was_in:
                lowest = self._stop_min_speed.pop(idx, np.inf)
                if lowest >= STOP_SPEED:
                    events.append(self._event(EventKind.STOP_SIGN, step, state))

        if suppressed:
            if events:
                logger.debug(f"Step {step}: suppressed {[e.kind.value for e in events]} during cooldown")
            return []
        return events

    def reset(self) -> None:
        self._stop_min_speed.clear()
