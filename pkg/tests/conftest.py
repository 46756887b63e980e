import logging
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from api.server import BackgroundServer, ReferenceServer  # noqa: E402
from augmentation.domains import get_domain  # noqa: E402
from core.types import ClassId, DEFAULT_PALETTE, Frame, SemanticMask, View  # noqa: E402
from simulator.track import default_track  # noqa: E402
from simulator.world import make_world  # noqa: E402

SCENARIO_TEMPLATE = """\
name = "{name}"
mode = "{mode}"
n_steps = {n_steps}
tick_ms = {tick_ms}
{extra}
"""


@pytest.fixture(autouse=True)
def _quiet_logger():
    logger = logging.getLogger("adstest")
    level = logger.level
    logger.setLevel(logging.WARNING)
    yield
    logger.setLevel(level)


@pytest.fixture(scope="session")
def track():
    return default_track()


@pytest.fixture
def world(track):
    return make_world(track)


@pytest.fixture
def frame(world):
    return world.render()


@pytest.fixture
def night():
    return get_domain("night")


@pytest.fixture
def scenario_file(tmp_path):
    """Write a scenario TOML and return its path."""

    def write(name="test", mode="default", n_steps=50, tick_ms=0.0, extra="", filename=None):
        path = tmp_path / (filename or f"{name}.toml")
        path.write_text(SCENARIO_TEMPLATE.format(name=name, mode=mode, n_steps=n_steps,
                                                 tick_ms=tick_ms, extra=extra), encoding="utf-8")
        return path

    return write


@pytest.fixture
def server():
    with BackgroundServer(ReferenceServer("127.0.0.1", 0)) as background:
        yield background


def road_frame(width=32, height=16, left=10, right=22, step=0) -> Frame:
    """Painted frame with a vertical road band between columns left..right-1."""
    classes = np.full((height, width), int(ClassId.BACKGROUND), dtype=np.uint8)
    classes[:, left:right] = int(ClassId.ROAD)
    mask = SemanticMask(classes, [int(c) for c in DEFAULT_PALETTE.class_ids])
    return Frame(step=step, views=(View("front", DEFAULT_PALETTE.paint(mask), mask),))
