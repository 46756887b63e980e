from .types import (
    ALL_CLASSES,
    DEFAULT_PALETTE,
    ClassId,
    Frame,
    Image,
    Palette,
    SemanticMask,
    URBAN_CLASSES,
    View,
)
from .codecs import decode_pgm, decode_ppm, encode_pgm, encode_ppm
from .segment import (
    ColourPathSegmenter,
    PaletteSegmenter,
    Segmenter,
    segment_nearest,
    segment_palette,
    segment_paths,
)

__all__ = [
    "ALL_CLASSES",
    "DEFAULT_PALETTE",
    "ClassId",
    "Frame",
    "Image",
    "Palette",
    "SemanticMask",
    "URBAN_CLASSES",
    "View",
    "decode_pgm",
    "decode_ppm",
    "encode_pgm",
    "encode_ppm",
    "ColourPathSegmenter",
    "PaletteSegmenter",
    "Segmenter",
    "segment_nearest",
    "segment_palette",
    "segment_paths",
]
