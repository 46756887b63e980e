from .track import Segment, TrackModel, default_track
from .vehicle import ControlCommand, VehicleState, initial_state, step
from .scene import EventKind, MisbehaviorEvent, ObjectKind, Scene, SceneObject
from .render import Camera, Renderer
from .events import EventDetector
from .world import StepOutcome, World, make_world
from .scenario import ScenarioConfig, load_scenario

__all__ = [
    "Segment",
    "TrackModel",
    "default_track",
    "ControlCommand",
    "VehicleState",
    "initial_state",
    "step",
    "EventKind",
    "MisbehaviorEvent",
    "ObjectKind",
    "Scene",
    "SceneObject",
    "Camera",
    "Renderer",
    "EventDetector",
    "StepOutcome",
    "World",
    "make_world",
    "ScenarioConfig",
    "load_scenario",
]
