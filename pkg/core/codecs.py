"""Binary PPM (P6) and PGM (P5) codecs, maxval 255."""

from typing import Iterable, Tuple

import numpy as np

from errors import CodecError
from .types import ALL_CLASSES, Image, SemanticMask

_WHITESPACE = b" \t\n\r\x0b\x0c"


def _read_header(data: bytes, magic: bytes) -> Tuple[int, int, int]:
    """Return (width, height, payload offset) for a P5/P6 header."""
    if len(data) < 2 or data[:2] != magic:
        found = data[:2].decode("ascii", errors="replace")
        raise CodecError(f"malformed header: expected magic {magic.decode()}, found '{found}'")

    pos = 2
    values = []
    while len(values) < 3:
        if pos >= len(data):
            raise CodecError("malformed header: unexpected end of header")
        if data[pos] not in _WHITESPACE:
            raise CodecError("malformed header: missing whitespace separator")
        while pos < len(data) and data[pos] in _WHITESPACE:
            pos += 1
        # Comments run to end of line
        while pos < len(data) and data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise CodecError("malformed header: unterminated comment")
            pos = end + 1
            while pos < len(data) and data[pos] in _WHITESPACE:
                pos += 1
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise CodecError("malformed header: expected a decimal number")
        values.append(int(data[start:pos]))

    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise CodecError("malformed header: maxval must be followed by one whitespace byte")
    width, height, maxval = values
    if maxval != 255:
        raise CodecError(f"unsupported maxval {maxval}, only 255 is accepted")
    if width < 1 or height < 1:
        raise CodecError(f"malformed header: invalid dimensions {width}x{height}")
    return width, height, pos + 1


def decode_ppm(data: bytes) -> Image:
    width, height, offset = _read_header(data, b"P6")
    expected = width * height * 3
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise CodecError(f"truncated payload: expected {expected} bytes, got {len(payload)}")
    return Image.from_bytes(width, height, payload)


def encode_ppm(image: Image) -> bytes:
    return b"P6\n%d %d\n255\n" % (image.width, image.height) + image.tobytes()


def decode_pgm(data: bytes, declared: Iterable[int] = ALL_CLASSES) -> SemanticMask:
    width, height, offset = _read_header(data, b"P5")
    expected = width * height
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise CodecError(f"truncated payload: expected {expected} bytes, got {len(payload)}")
    declared = frozenset(int(c) for c in declared)
    classes = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    present = np.unique(classes)
    stray = [int(c) for c in present if int(c) not in declared]
    if stray:
        raise CodecError(f"out-of-range class index {stray[0]} (declared classes: {sorted(declared)})")
    return SemanticMask(classes, declared)


def encode_pgm(mask: SemanticMask) -> bytes:
    return b"P5\n%d %d\n255\n" % (mask.width, mask.height) + mask.classes.tobytes()
