import logging

from api.client import FramedClient
from api.protocol import AgentActRequest, AgentActResponse, ViewPayload
from core.types import Frame
from errors import ProtocolError
from simulator.vehicle import ControlCommand
from .base import Agent, AgentSpec

logger = logging.getLogger("adstest")


class RemoteAgent(Agent):
    """Forwards each frame to an agent server and returns its command."""

    name = "remote"

    def __init__(self, spec: AgentSpec):
        super().__init__(spec)
        self.client = FramedClient(spec.endpoint)

    def act(self, frame: Frame) -> ControlCommand:
        request = AgentActRequest(frame_id=frame.step,
                                  views=[ViewPayload.from_image(img) for img in frame.images])
        reply = self.client.request(request)
        if not isinstance(reply, AgentActResponse):
            raise ProtocolError(f"Expected agent_action, got {reply.type}")
        if reply.frame_id != frame.step:
            raise ProtocolError(f"Action for frame {reply.frame_id} while waiting for frame {frame.step}")
        cmd = ControlCommand(steering_target=reply.steering_target, throttle=reply.throttle)
        cmd = cmd.clamped(self.steering_limit)
        self.previous_steering = cmd.steering_target
        return cmd

    def close(self) -> None:
        self.client.close()
