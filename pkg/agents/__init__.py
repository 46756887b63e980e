from core.types import DEFAULT_PALETTE, Palette
from .base import Agent, AgentKind, AgentSpec
from .pursuit import BrightnessFragileAgent, PurePursuitMaskAgent
from .remote import RemoteAgent


def build_agent(spec: AgentSpec, palette: Palette = DEFAULT_PALETTE) -> Agent:
    if spec.kind == "pure_pursuit_mask":
        return PurePursuitMaskAgent(spec, palette)
    if spec.kind == "brightness_fragile":
        return BrightnessFragileAgent(spec)
    return RemoteAgent(spec)


__all__ = [
    "Agent",
    "AgentKind",
    "AgentSpec",
    "BrightnessFragileAgent",
    "PurePursuitMaskAgent",
    "RemoteAgent",
    "build_agent",
]
