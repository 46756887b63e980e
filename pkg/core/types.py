from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from simulator.vehicle import VehicleState

RGB = Tuple[int, int, int]

# ITU-R BT.601 luma weights
LUMA = np.array([0.299, 0.587, 0.114])

# Default frame dims (height x width); urban mode uses 600 x 800 and three views
DEFAULT_HEIGHT = 160
DEFAULT_WIDTH = 320
URBAN_HEIGHT = 600
URBAN_WIDTH = 800


class ClassId(IntEnum):
    BACKGROUND = 0
    ROAD = 1
    PEDESTRIAN = 2
    VEHICLE = 3
    TRAFFIC_SIGN = 4
    TRAFFIC_LIGHT = 5

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "ClassId":
        try:
            return cls[label.strip().upper()]
        except KeyError:
            raise ValueError(f"Unknown semantic class '{label}'") from None


ALL_CLASSES: FrozenSet[int] = frozenset(int(c) for c in ClassId)
URBAN_CLASSES: Tuple[ClassId, ...] = (
    ClassId.ROAD,
    ClassId.PEDESTRIAN,
    ClassId.VEHICLE,
    ClassId.TRAFFIC_SIGN,
    ClassId.TRAFFIC_LIGHT,
)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.uint8, copy=True)
    array.setflags(write=False)
    return array


class Image:
    """8-bit RGB image, row-major, top-left origin. Immutable."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels: np.ndarray):
        pixels = np.asarray(pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"Image pixels must have shape (height, width, 3), got {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError("Image width and height must be >= 1")
        if pixels.dtype != np.uint8:
            if np.any(pixels < 0) or np.any(pixels > 255):
                raise ValueError("Image pixel values must lie in [0, 255]")
        self._pixels = _frozen(pixels)

    @classmethod
    def from_bytes(cls, width: int, height: int, raw: bytes) -> "Image":
        if len(raw) != width * height * 3:
            raise ValueError(f"Expected {width * height * 3} pixel bytes, got {len(raw)}")
        return cls(np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3))

    @classmethod
    def filled(cls, width: int, height: int, color: RGB) -> "Image":
        pixels = np.empty((height, width, 3), dtype=np.uint8)
        pixels[...] = color
        return cls(pixels)

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def tobytes(self) -> bytes:
        return self._pixels.tobytes()

    def luma(self) -> np.ndarray:
        """Per-pixel luma on the 0..255 scale, float64."""
        return self.pixels.astype(np.float64) @ LUMA

    def flip_horizontal(self) -> "Image":
        return Image(self._pixels[:, ::-1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return np.array_equal(self._pixels, other._pixels)

    def __hash__(self):
        return hash((self.shape, self._pixels.tobytes()))

    def __repr__(self) -> str:
        return f"Image(width={self.width}, height={self.height})"


class SemanticMask:
    """Row-major 8-bit class indices over a declared class set. Immutable."""

    __slots__ = ("_classes", "_declared")

    def __init__(self, classes: np.ndarray, declared: Iterable[int] = ALL_CLASSES):
        classes = np.asarray(classes)
        if classes.ndim != 2 or classes.shape[0] < 1 or classes.shape[1] < 1:
            raise ValueError(f"Mask must have shape (height, width), got {classes.shape}")
        self._declared = frozenset(int(c) for c in declared)
        if np.any(classes < 0) or np.any(classes > 255):
            raise ValueError("Mask class indices must be 8-bit")
        self._classes = _frozen(classes)
        present = np.unique(self._classes)
        stray = [int(c) for c in present if int(c) not in self._declared]
        if stray:
            raise ValueError(f"Mask contains undeclared class indices {stray}")

    @property
    def classes(self) -> np.ndarray:
        return self._classes

    @property
    def declared(self) -> FrozenSet[int]:
        return self._declared

    @property
    def width(self) -> int:
        return self._classes.shape[1]

    @property
    def height(self) -> int:
        return self._classes.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def binary(self, class_id: int) -> np.ndarray:
        return self._classes == int(class_id)

    def flip_horizontal(self) -> "SemanticMask":
        return SemanticMask(self._classes[:, ::-1], self._declared)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SemanticMask):
            return NotImplemented
        return np.array_equal(self._classes, other._classes)

    def __hash__(self):
        return hash((self.shape, self._classes.tobytes()))

    def __repr__(self) -> str:
        return f"SemanticMask(width={self.width}, height={self.height})"


@dataclass(frozen=True)
class Palette:
    """Reference colour per semantic class."""

    entries: Dict[ClassId, RGB]

    def __post_init__(self):
        entries = {ClassId(k): tuple(int(c) for c in v) for k, v in self.entries.items()}
        if not entries:
            raise ValueError("Palette must not be empty")
        for required in (ClassId.ROAD, ClassId.BACKGROUND):
            if required not in entries:
                raise ValueError(f"Palette must declare class '{required.label}'")
        for class_id, color in entries.items():
            if len(color) != 3 or any(c < 0 or c > 255 for c in color):
                raise ValueError(f"Invalid colour {color} for class '{class_id.label}'")
        if len(set(entries.values())) != len(entries):
            raise ValueError("Two classes share the same palette colour")
        object.__setattr__(self, "entries", dict(sorted(entries.items())))

    @property
    def class_ids(self) -> List[ClassId]:
        return list(self.entries.keys())

    def color(self, class_id: int) -> RGB:
        return self.entries[ClassId(class_id)]

    def lookup_table(self) -> np.ndarray:
        """256x3 table mapping class index to colour (unused indices stay black)."""
        table = np.zeros((256, 3), dtype=np.uint8)
        for class_id, color in self.entries.items():
            table[int(class_id)] = color
        return table

    def paint(self, mask: SemanticMask) -> Image:
        return Image(self.lookup_table()[mask.classes])

    def shifted(self, delta: int) -> "Palette":
        """Palette with every channel moved by `delta`, clipped to [0, 255]."""
        shifted = {}
        for class_id, color in self.entries.items():
            shifted[class_id] = tuple(int(np.clip(c + delta, 0, 255)) for c in color)
        if len(set(shifted.values())) != len(shifted):
            raise ValueError(f"Shift by {delta} collapses palette colours")
        return Palette(shifted)


DEFAULT_PALETTE = Palette({
    ClassId.BACKGROUND: (34, 110, 34),
    ClassId.ROAD: (150, 150, 150),
    ClassId.PEDESTRIAN: (220, 20, 60),
    ClassId.VEHICLE: (0, 0, 142),
    ClassId.TRAFFIC_SIGN: (220, 220, 0),
    ClassId.TRAFFIC_LIGHT: (250, 170, 30),
})


@dataclass(frozen=True)
class View:
    """One camera view: image plus its ground-truth mask (when known)."""

    name: str
    image: Image
    mask: Optional[SemanticMask] = None


@dataclass(frozen=True)
class Frame:
    """Camera views and vehicle state at one simulation step."""

    step: int
    views: Tuple[View, ...]
    state: Optional["VehicleState"] = None

    @property
    def front(self) -> View:
        return self.views[0]

    @property
    def images(self) -> List[Image]:
        return [view.image for view in self.views]

    @property
    def masks(self) -> List[Optional[SemanticMask]]:
        return [view.mask for view in self.views]

    def with_images(self, images: List[Image]) -> "Frame":
        """Same frame, views replaced by `images` (ground-truth masks kept)."""
        if len(images) != len(self.views):
            raise ValueError(f"Expected {len(self.views)} images, got {len(images)}")
        views = tuple(View(v.name, img, v.mask) for v, img in zip(self.views, images))
        return Frame(step=self.step, views=views, state=self.state)
