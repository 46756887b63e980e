import numpy as np

from core.segment import PaletteSegmenter
from core.types import ClassId, DEFAULT_PALETTE, Frame, Image, Palette
from simulator.vehicle import ControlCommand
from .base import Agent, AgentSpec


class PurePursuitMaskAgent(Agent):
    """Segments the front view with its own palette and chases the road centroid."""

    name = "pure_pursuit_mask"

    def __init__(self, spec: AgentSpec, palette: Palette = DEFAULT_PALETTE):
        super().__init__(spec)
        self.segmenter = PaletteSegmenter.from_palette(palette)

    def act(self, frame: Frame) -> ControlCommand:
        image = frame.front.image
        lo, hi = self.band(image.height)
        band = image.pixels[lo:hi + 1]
        mask = self.segmenter.segment(Image(band))
        return self.steer_from(mask.binary(ClassId.ROAD))


class BrightnessFragileAgent(Agent):
    """Treats bright pixels as road; dark domains leave it blind."""

    name = "brightness_fragile"

    def act(self, frame: Frame) -> ControlCommand:
        image = frame.front.image
        lo, hi = self.band(image.height)
        luma = Image(image.pixels[lo:hi + 1]).luma()
        road = luma >= self.spec.brightness_threshold
        if road.mean() < self.spec.min_road_fraction:
            road = np.zeros_like(road)
        return self.steer_from(road)
