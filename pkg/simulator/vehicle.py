import math
from dataclasses import dataclass, replace

import numpy as np

from config import SimulatorConfig, config
from .track import TrackModel


@dataclass(frozen=True)
class ControlCommand:
    steering_target: float
    throttle: float = 0.5

    def clamped(self, steering_limit: float) -> "ControlCommand":
        return ControlCommand(
            steering_target=float(np.clip(self.steering_target, -steering_limit, steering_limit)),
            throttle=float(np.clip(self.throttle, 0.0, 1.0)),
        )


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float
    speed: float
    steering: float = 0.0
    s: float = 0.0
    cte: float = 0.0


def initial_state(track: TrackModel, speed: float, s: float = 0.0) -> VehicleState:
    """Vehicle parked on the centreline at arclength s, heading along the track."""
    x, y, heading = track.pose_at(s)
    s, cte = track.project_to_centerline(x, y)
    return VehicleState(x=x, y=y, heading=heading, speed=speed, steering=0.0, s=s, cte=cte)


def step(state: VehicleState, cmd: ControlCommand, dt: float, track: TrackModel,
         params: SimulatorConfig = config.sim) -> VehicleState:
    """Kinematic bicycle update with slewed steering and first-order speed response."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    cmd = cmd.clamped(params.steering_limit)

    v, theta, delta = state.speed, state.heading, state.steering
    x = state.x + v * math.cos(theta) * dt
    y = state.y + v * math.sin(theta) * dt
    heading = theta + (v / params.wheelbase) * math.tan(delta) * dt
    heading = math.atan2(math.sin(heading), math.cos(heading))

    max_change = params.slew_rate * dt
    steering = delta + float(np.clip(cmd.steering_target - delta, -max_change, max_change))
    steering = float(np.clip(steering, -params.steering_limit, params.steering_limit))

    target_speed = cmd.throttle * params.max_speed
    speed = v + (target_speed - v) * min(1.0, dt / params.speed_time_constant)

    s, cte = track.project_to_centerline(x, y, strict=False)
    return VehicleState(x=x, y=y, heading=heading, speed=speed, steering=steering, s=s, cte=cte)


def reposition(state: VehicleState, track: TrackModel, advance: float) -> VehicleState:
    """Put the vehicle back on the centreline `advance` metres further along, heading tangent."""
    s = (state.s + advance) % track.total_length
    x, y, heading = track.pose_at(s)
    return replace(state, x=x, y=y, heading=math.atan2(math.sin(heading), math.cos(heading)),
                   s=s, cte=0.0)
