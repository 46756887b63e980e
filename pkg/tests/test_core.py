import numpy as np
import pytest

from core.codecs import decode_pgm, decode_ppm, encode_pgm, encode_ppm
from core.dataset import Dataset, DatasetWriter, MANIFEST_NAME
from core.segment import ColourPathSegmenter, PaletteSegmenter, segment_nearest, segment_palette
from core.types import ClassId, DEFAULT_PALETTE, Image, Palette, SemanticMask
from errors import AdsTestError, CodecError, SegmenterError


def _mask(classes):
    return SemanticMask(np.asarray(classes, dtype=np.uint8))


def test_ppm_header_and_payload():
    image = Image.filled(3, 2, (1, 2, 3))
    data = encode_ppm(image)
    assert data.startswith(b"P6\n3 2\n255\n")
    assert len(data) == len(b"P6\n3 2\n255\n") + 3 * 2 * 3
    assert decode_ppm(data) == image


def test_ppm_header_with_comment():
    payload = bytes(range(12))
    image = decode_ppm(b"P6\n# made by hand\n2 2\n255\n" + payload)
    assert image.shape == (2, 2)
    assert image.pixels[1, 1].tolist() == [9, 10, 11]


@pytest.mark.parametrize("data, message", [
    (b"P5\n2 2\n255\n" + bytes(12), "malformed header"),
    (b"P6\n2 2\n65535\n" + bytes(24), "maxval"),
    (b"P6\n2 2\n255\n" + bytes(5), "truncated payload"),
    (b"P6\n2", "malformed header"),
])
def test_ppm_rejects_bad_input(data, message):
    with pytest.raises(CodecError, match=message):
        decode_ppm(data)


def test_pgm_rejects_undeclared_class():
    data = b"P5\n2 2\n255\n" + bytes([0, 1, 1, 9])
    with pytest.raises(CodecError, match="out-of-range class index 9"):
        decode_pgm(data)


def test_pgm_keeps_class_indices():
    mask = _mask([[0, 1, 2], [3, 4, 5]])
    decoded = decode_pgm(encode_pgm(mask))
    assert decoded == mask
    assert decoded.classes.dtype == np.uint8


def test_image_is_immutable():
    image = Image.filled(2, 2, (5, 5, 5))
    with pytest.raises(ValueError):
        image.pixels[0, 0, 0] = 1


def test_image_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        Image(np.full((2, 2, 3), 300))


def test_mask_rejects_undeclared_class():
    with pytest.raises(ValueError, match="undeclared"):
        SemanticMask(np.array([[0, 1]]), declared=[0])


def test_luma_uses_bt601_weights():
    luma = Image.filled(1, 1, (100, 200, 50)).luma()
    assert luma[0, 0] == pytest.approx(0.299 * 100 + 0.587 * 200 + 0.114 * 50)


def test_palette_rejects_duplicate_colours():
    with pytest.raises(ValueError, match="same palette colour"):
        Palette({ClassId.BACKGROUND: (1, 1, 1), ClassId.ROAD: (1, 1, 1)})


def test_palette_shift_clips():
    shifted = DEFAULT_PALETTE.shifted(120)
    assert shifted.color(ClassId.ROAD) == (255, 255, 255)
    assert shifted.color(ClassId.BACKGROUND) == (154, 230, 154)


def test_segmenter_recovers_painted_mask():
    mask = _mask(np.random.default_rng(0).integers(0, 6, size=(12, 20)))
    image = DEFAULT_PALETTE.paint(mask)
    assert PaletteSegmenter.from_palette(DEFAULT_PALETTE).segment(image) == mask
    assert segment_palette(image, DEFAULT_PALETTE) == mask


def test_segmenter_ties_go_to_lowest_class():
    image = Image.filled(1, 1, (10, 10, 10))
    mask = segment_nearest(image, [(3, (0, 10, 10)), (1, (20, 10, 10))])
    assert int(mask.classes[0, 0]) == 1


def test_segmenter_needs_references():
    with pytest.raises(SegmenterError):
        PaletteSegmenter([])


def test_colour_path_segmenter_follows_blends():
    road_a, road_b = (150, 150, 150), (45, 45, 60)
    segmenter = ColourPathSegmenter([
        (int(ClassId.BACKGROUND), (34, 110, 34), (10, 33, 25)),
        (int(ClassId.ROAD), road_a, road_b),
    ])
    midpoint = tuple((a + b) // 2 for a, b in zip(road_a, road_b))
    mask = segmenter.segment(Image.filled(1, 1, midpoint))
    assert int(mask.classes[0, 0]) == int(ClassId.ROAD)


def test_dataset_write_then_read(tmp_path):
    mask = _mask([[0, 1], [1, 0]])
    image = DEFAULT_PALETTE.paint(mask)
    augmented = Image.filled(2, 2, (9, 9, 9))
    with DatasetWriter(tmp_path, domain="night", strategy="refine", seed=3) as writer:
        writer.add(image, mask, augmented, seed=11, gt_valid=True, category="front")
        writer.add(image, mask)

    dataset = Dataset(tmp_path)
    assert len(dataset) == 2
    assert dataset.manifest.domain == "night"
    samples = list(dataset)
    assert samples[0].augmented == augmented
    assert samples[0].entry.gt_valid is True
    assert samples[0].entry.category == "front"
    assert samples[1].augmented is None
    assert samples[1].mask == mask


def test_dataset_detects_tampering(tmp_path):
    mask = _mask([[0, 1]])
    with DatasetWriter(tmp_path) as writer:
        entry = writer.add(DEFAULT_PALETTE.paint(mask), mask)
    path = tmp_path / entry.image
    data = bytearray(path.read_bytes())
    data[-1] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(CodecError, match="hash mismatch"):
        list(Dataset(tmp_path))
    assert len(list(Dataset(tmp_path, verify=False))) == 1


def test_dataset_needs_manifest(tmp_path):
    with pytest.raises(AdsTestError, match=MANIFEST_NAME):
        Dataset(tmp_path)


def test_dataset_rejects_mismatched_mask(tmp_path):
    with DatasetWriter(tmp_path) as writer:
        with pytest.raises(ValueError):
            writer.add(Image.filled(3, 3, (0, 0, 0)), _mask([[0, 1]]))
