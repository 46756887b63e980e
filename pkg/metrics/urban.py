"""Leaderboard-style urban scores."""

from typing import Dict, Iterable, Mapping, Optional

from config import config
from errors import MetricError
from simulator.scene import EventKind
from storage.runlog import EventRecord

INFRACTIONS = ("cp", "cv", "ori", "rli", "ssi")

_EVENT_INFRACTION = {
    EventKind.COLLISION_PEDESTRIAN.value: "cp",
    EventKind.COLLISION_VEHICLE.value: "cv",
    EventKind.OFF_ROAD_URBAN.value: "ori",
    EventKind.RED_LIGHT.value: "rli",
    EventKind.STOP_SIGN.value: "ssi",
}


def count_infractions(events: Iterable[EventRecord]) -> Dict[str, int]:
    counts = {name: 0 for name in INFRACTIONS}
    for event in events:
        name = _EVENT_INFRACTION.get(event.kind)
        if name is not None:
            counts[name] += 1
    return counts


def route_completion(progress: float, route_length: float) -> float:
    if route_length <= 0:
        raise MetricError(f"route_length must be positive, got {route_length}")
    return 100.0 * min(1.0, max(0.0, progress) / route_length)


def driving_score(rc: float, infractions: Mapping[str, int],
                  penalties: Optional[Mapping[str, float]] = None) -> float:
    """RC times each infraction's penalty coefficient, once per occurrence."""
    if not 0.0 <= rc <= 100.0:
        raise MetricError(f"Route completion must lie in [0, 100], got {rc}")
    penalties = penalties or config.metrics.penalties
    score = rc
    for name, count in infractions.items():
        if name not in penalties:
            raise MetricError(f"Unknown infraction '{name}'")
        if count < 0:
            raise MetricError(f"Negative count for '{name}'")
        score *= penalties[name] ** count
    return score
