from typing import Iterable, List, Protocol, Sequence, Tuple

import numpy as np

from errors import SegmenterError
from .types import ALL_CLASSES, Image, Palette, RGB, SemanticMask

Reference = Tuple[int, RGB]


class Segmenter(Protocol):
    """Anything that turns an image into a semantic mask."""

    def segment(self, image: Image) -> SemanticMask:
        ...


def segment_nearest(image: Image, references: Sequence[Reference],
                    declared: Iterable[int] = ALL_CLASSES) -> SemanticMask:
    """Assign every pixel the class of its nearest reference colour.

    Several references may share a class. Ties go to the lowest class id.
    """
    if not references:
        raise SegmenterError("Segmenter needs at least one reference colour")
    # Stable sort keeps argmin's first-hit rule equal to lowest-class-wins
    ordered = sorted(references, key=lambda ref: int(ref[0]))
    class_ids = np.array([int(c) for c, _ in ordered], dtype=np.uint8)
    colors = np.array([color for _, color in ordered], dtype=np.float64)

    pixels = image.pixels.reshape(-1, 3).astype(np.float64)
    # |p - c|^2 = |p|^2 - 2 p.c + |c|^2; |p|^2 is constant per pixel. Integer
    # inputs keep every term exact in float64.
    scores = (colors * colors).sum(axis=1)[None, :] - 2.0 * (pixels @ colors.T)
    nearest = np.argmin(scores, axis=1)
    classes = class_ids[nearest].reshape(image.height, image.width)
    return SemanticMask(classes, declared)


def segment_palette(image: Image, palette: Palette) -> SemanticMask:
    references = [(int(c), color) for c, color in palette.entries.items()]
    return segment_nearest(image, references, [int(c) for c in palette.class_ids])


class PaletteSegmenter:
    """Nearest-colour segmenter over one or more reference colours per class."""

    def __init__(self, references: Sequence[Reference], declared: Iterable[int] = ALL_CLASSES):
        if not references:
            raise SegmenterError("Segmenter needs at least one reference colour")
        self.references: List[Reference] = [(int(c), tuple(int(v) for v in color))
                                             for c, color in references]
        self.declared = frozenset(int(c) for c in declared)
        unknown = {c for c, _ in self.references} - self.declared
        if unknown:
            raise SegmenterError(f"Reference colours for undeclared classes {sorted(unknown)}")

    @classmethod
    def from_palette(cls, palette: Palette) -> "PaletteSegmenter":
        return cls([(int(c), color) for c, color in palette.entries.items()],
                   [int(c) for c in palette.class_ids])

    def segment(self, image: Image) -> SemanticMask:
        return segment_nearest(image, self.references, self.declared)

    def __repr__(self) -> str:
        return f"PaletteSegmenter({len(self.references)} references)"


Path = Tuple[int, RGB, RGB]


def segment_paths(image: Image, paths: Sequence[Path],
                  declared: Iterable[int] = ALL_CLASSES) -> SemanticMask:
    """Assign every pixel the class of the nearest colour path (straight RGB segment).

    A path with equal endpoints is a single reference colour. Ties go to the
    lowest class id.
    """
    if not paths:
        raise SegmenterError("Segmenter needs at least one colour path")
    ordered = sorted(paths, key=lambda path: int(path[0]))
    class_ids = np.array([int(c) for c, _, _ in ordered], dtype=np.uint8)
    starts = np.array([a for _, a, _ in ordered], dtype=np.float64)
    directions = np.array([b for _, _, b in ordered], dtype=np.float64) - starts
    lengths = (directions * directions).sum(axis=1)

    pixels = image.pixels.reshape(-1, 3).astype(np.float64)
    # rel = p - a; |rel|^2 and rel.d expanded so every path costs one matmul column
    rel_sq = ((pixels * pixels).sum(axis=1)[:, None] - 2.0 * (pixels @ starts.T)
              + (starts * starts).sum(axis=1)[None, :])
    rel_dir = pixels @ directions.T - (starts * directions).sum(axis=1)[None, :]
    safe = np.where(lengths > 0, lengths, 1.0)
    t = np.where(lengths > 0, np.clip(rel_dir / safe, 0.0, 1.0), 0.0)
    distances = rel_sq - 2.0 * t * rel_dir + t * t * lengths[None, :]

    nearest = np.argmin(distances, axis=1)
    classes = class_ids[nearest].reshape(image.height, image.width)
    return SemanticMask(classes, declared)


class ColourPathSegmenter:
    """Nearest-path segmenter: each class owns one or more colour segments.

    Used where images are known to be blends between reference colours.
    """

    def __init__(self, paths: Sequence[Path], declared: Iterable[int] = ALL_CLASSES):
        if not paths:
            raise SegmenterError("Segmenter needs at least one colour path")
        self.paths: List[Path] = [(int(c), tuple(int(v) for v in a), tuple(int(v) for v in b))
                                  for c, a, b in paths]
        self.declared = frozenset(int(c) for c in declared)
        unknown = {c for c, _, _ in self.paths} - self.declared
        if unknown:
            raise SegmenterError(f"Colour paths for undeclared classes {sorted(unknown)}")

    def segment(self, image: Image) -> SemanticMask:
        return segment_paths(image, self.paths, self.declared)

    def __repr__(self) -> str:
        return f"ColourPathSegmenter({len(self.paths)} paths)"
