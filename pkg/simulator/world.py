import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

from config import SimulatorConfig, config
from core.types import Frame
from errors import AdsTestError
from .events import EventDetector
from .render import Renderer
from .scene import MisbehaviorEvent, Scene
from .track import TrackModel
from .vehicle import ControlCommand, VehicleState, initial_state, reposition, step

logger = logging.getLogger("adstest")


@dataclass
class StepOutcome:
    state: VehicleState
    events: List[MisbehaviorEvent] = field(default_factory=list)
    # True when the step ran inside a post-reset cooldown window
    cooldown: bool = False


class World:
    """Single-owner closed-loop world: vehicle, track, scene, renderer and event detector."""

    def __init__(self, track: TrackModel, scene: Scene, renderer: Renderer,
                 start_speed: float = 5.0, urban: bool = False, tick_ms: float = 0.0,
                 params: SimulatorConfig = config.sim):
        self.track = track
        self.scene = scene
        self.renderer = renderer
        self.params = params
        self.urban = urban
        # Wall-clock cost of one engine tick, emulating a simulator that runs at a fixed frame rate
        self.tick_s = tick_ms / 1000.0
        self.detector = EventDetector(track, scene, urban=urban, params=params)
        self.state = initial_state(track, start_speed)
        self.step_index = 0
        self.cooldown_left = 0
        # Arclength covered by driving, excluding reset jumps
        self.progress = 0.0
        self._pending: List[MisbehaviorEvent] = []

    def render(self) -> Frame:
        return self.renderer.render(self.state, self.step_index)

    def _advance_s(self, prev: VehicleState, state: VehicleState) -> float:
        total = self.track.total_length
        ds = (state.s - prev.s) % total
        # Backwards motion shows up as a near-full-lap jump
        return ds - total if ds > total / 2.0 else ds

    def reset_after_event(self) -> VehicleState:
        """Move the vehicle reset_advance metres on, tangent to the centreline, and start the cooldown."""
        if not self._pending:
            raise AdsTestError("reset_after_event called with no event pending")
        self.state = reposition(self.state, self.track, self.params.reset_advance)
        self.cooldown_left = self.params.cooldown_steps
        self._pending = []
        return self.state

    def advance(self, cmd: ControlCommand) -> StepOutcome:
        if self.tick_s > 0:
            time.sleep(self.tick_s)
        prev = self.state
        in_cooldown = self.cooldown_left > 0
        self.state = step(prev, cmd, self.params.dt, self.track, self.params)
        self.progress += self._advance_s(prev, self.state)

        events = self.detector.detect(prev, self.state, self.step_index, suppressed=in_cooldown)
        if in_cooldown:
            self.cooldown_left -= 1
        if events:
            for event in events:
                logger.debug(f"Step {event.step}: {event.kind.value} in sector {event.sector} at s={event.s:.2f}")
            self._pending = events
            self.reset_after_event()

        outcome = StepOutcome(state=self.state, events=events, cooldown=in_cooldown)
        self.step_index += 1
        return outcome


def make_world(track: TrackModel, scene: Optional[Scene] = None, start_speed: float = 5.0) -> World:
    """Single-view world with the default camera, mostly for tests and tools."""
    scene = scene or Scene()
    return World(track, scene, Renderer(track, scene), start_speed=start_speed)
