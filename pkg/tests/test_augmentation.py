import json

import numpy as np
import pytest
from pydantic import ValidationError

from augmentation import (
    AugmentParams,
    DomainSpec,
    augment,
    augment_inpaint,
    augment_instruction,
    augment_refine,
    get_all_domains,
    get_domain,
    load_catalogue,
)
from augmentation.backends import IdentityAugmenter, MockAugmenter
from augmentation.params import derive_seed
from augmentation.strategies import (
    edge_band,
    instruction_corrupt_prob,
    refine_corrupt_prob,
    shear_rows,
)
from core.types import ClassId, Frame, Image, View
from errors import AugmentationError, ConfigError
from conftest import road_frame

CLEAN = AugmentParams(corrupt_base_prob=0.0)


def test_catalogue_has_the_documented_domains():
    names = {d.name for d in get_all_domains()}
    assert {"sunny", "dust_storm", "summer", "autumn", "winter", "afternoon",
            "night", "desert", "forest"} <= names
    assert get_domain("night").category == "times_of_day"


def test_unknown_domain():
    with pytest.raises(ConfigError, match="Unknown domain 'mars'"):
        get_domain("mars")


def test_domain_must_cover_every_class():
    with pytest.raises(ValidationError, match="misses classes"):
        DomainSpec(name="partial", per_class_color={"road": (1, 2, 3), "background": (4, 5, 6)})


def test_custom_catalogue(tmp_path, night):
    path = tmp_path / "domains.json"
    path.write_text(json.dumps({"custom": [night.model_dump(exclude={"category"}) | {"name": "dusk"}]}),
                    encoding="utf-8")
    try:
        catalogue = load_catalogue(str(path))
        assert [d.name for d in catalogue["custom"]] == ["dusk"]
        assert get_domain("dusk").category == "custom"
    finally:
        load_catalogue()


def test_invalid_catalogue(tmp_path):
    path = tmp_path / "domains.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="Invalid JSON"):
        load_catalogue(str(path))
    with pytest.raises(ConfigError, match="No domain catalogue"):
        load_catalogue(str(tmp_path / "missing.json"))


def test_tone_transform(night):
    assert night.tone.apply_color((150, 150, 150)) == (45, 45, 60)
    assert night.tone.apply_color((255, 255, 255)) == (76, 76, 92)


def test_domain_segmenter_reads_toned_frames(frame, night):
    toned = night.tone.apply(frame.front.image.pixels)
    assert night.segmenter().segment(Image(toned)) == frame.front.mask


def test_derive_seed_is_stable():
    assert derive_seed(7, 3) == derive_seed(7, 3)
    assert derive_seed(7, 3) != derive_seed(7, 4)
    assert derive_seed(7, 3) != derive_seed(8, 3)
    assert 0 <= derive_seed(2 ** 40, 1, 2) < 2 ** 64


def test_params_validation():
    with pytest.raises(ValidationError):
        AugmentParams(noise_level=1.5)
    with pytest.raises(ValidationError):
        AugmentParams(seed=-1)
    assert AugmentParams(seed=3).with_seed(9).seed == 9


def test_corruption_probabilities():
    assert instruction_corrupt_prob(AugmentParams(corrupt_base_prob=0.48)) == pytest.approx(0.48)
    assert instruction_corrupt_prob(AugmentParams(corrupt_base_prob=0.48, text_guidance=20.0)) == pytest.approx(0.96)
    assert instruction_corrupt_prob(AugmentParams(corrupt_base_prob=0.48, image_guidance=0.5)) == 1.0
    assert refine_corrupt_prob(AugmentParams(corrupt_base_prob=0.12)) == pytest.approx(0.12)
    assert refine_corrupt_prob(AugmentParams(corrupt_base_prob=0.12, noise_level=1.0)) == pytest.approx(0.24)
    assert refine_corrupt_prob(AugmentParams(corrupt_base_prob=0.12, noise_level=0.0)) == 0.0


def _broken_rate(strategy, night, seeds, **params):
    frame = road_frame()
    broken = sum(not augment(frame, strategy, night, AugmentParams(seed=seed, **params)).gt_valid
                 for seed in seeds)
    return broken / len(seeds)


def test_observed_corruption_grows_with_base_prob_and_noise(night):
    seeds = range(500)
    bases = (0.0, 0.1, 0.25, 0.5)
    instruction = [_broken_rate("instruction", night, seeds, corrupt_base_prob=p) for p in bases]
    assert instruction == sorted(instruction)
    assert instruction[0] == 0.0
    assert all(abs(rate - p) < 0.08 for rate, p in zip(instruction, bases))

    levels = (0.0, 0.25, 0.5, 0.75, 1.0)
    refine = [_broken_rate("refine", night, seeds, corrupt_base_prob=0.25, noise_level=nu) for nu in levels]
    assert refine == sorted(refine)
    assert refine[0] == 0.0
    assert all(abs(rate - 0.5 * nu) < 0.08 for rate, nu in zip(refine, levels))


def test_instruction_tones_every_pixel(frame, night):
    result = augment_instruction(frame, night, CLEAN.with_seed(5))
    assert result.gt_valid is True
    assert result.seed_used == 5
    assert result.strategy == "instruction"
    assert result.images[0].pixels.tolist() == night.tone.apply(frame.front.image.pixels).tolist()


def test_instruction_corruption_shears_the_road(frame, night):
    result = augment_instruction(frame, night, AugmentParams(corrupt_base_prob=1.0))
    assert result.gt_valid is False
    assert result.images[0] != augment_instruction(frame, night, CLEAN).images[0]


def test_strategies_are_deterministic(frame, night):
    for strategy in ("instruction", "inpaint", "refine"):
        params = AugmentParams(seed=42)
        first = augment(frame, strategy, night, params)
        second = augment(frame, strategy, night, params)
        assert first.images == second.images
        assert first.gt_valid == second.gt_valid


def test_inpaint_keeps_preserved_pixels(frame, night):
    result = augment_inpaint(frame, night, CLEAN.with_seed(1))
    original = frame.front.image.pixels.astype(int)
    out = result.images[0].pixels.astype(int)
    road = frame.front.mask.binary(ClassId.ROAD)
    assert np.array_equal(out[road], original[road])
    target = np.asarray(night.target(ClassId.BACKGROUND))
    assert np.all(np.abs(out[~road] - target) <= 8)


def test_inpaint_corruption_erodes_the_road(frame, night):
    result = augment_inpaint(frame, night, AugmentParams(corrupt_base_prob=1.0))
    road = frame.front.mask.binary(ClassId.ROAD)
    changed = np.any(result.images[0].pixels != frame.front.image.pixels, axis=2)
    assert result.gt_valid is False
    assert np.any(changed & road)


def test_inpaint_can_regenerate_everything(frame, night):
    result = augment_inpaint(frame, night, CLEAN, preserved_classes=[])
    road = frame.front.mask.binary(ClassId.ROAD)
    out = result.images[0].pixels.astype(int)
    assert np.all(np.abs(out[road] - np.asarray(night.target(ClassId.ROAD))) <= 8)


def test_refine_without_noise_is_inpainting(frame, night):
    params = AugmentParams(corrupt_base_prob=0.0, noise_level=0.0, seed=3)
    assert augment_refine(frame, night, params).images == augment_inpaint(frame, night, params).images


def test_refine_full_noise_tones_the_interior(frame, night):
    params = AugmentParams(corrupt_base_prob=0.0, noise_level=1.0)
    out = augment_refine(frame, night, params).images[0].pixels
    interior = frame.front.mask.binary(ClassId.ROAD) & ~edge_band(frame.front.mask.classes)
    toned = night.tone.apply(frame.front.image.pixels)
    assert interior.any()
    assert np.array_equal(out[interior], toned[interior])


def test_masks_are_required(night):
    base = road_frame()
    bare = Frame(step=0, views=(View("front", base.front.image, None),))
    for strategy in ("inpaint", "refine"):
        with pytest.raises(AugmentationError, match="ground-truth masks"):
            augment(bare, strategy, night, CLEAN)
    # Instruction editing only needs the image
    assert augment(bare, "instruction", night, CLEAN).gt_valid is True


def test_preserved_classes_must_be_declared(frame, night):
    with pytest.raises(AugmentationError, match="not declared"):
        augment_inpaint(frame, night, CLEAN, preserved_classes=[42])


def test_unknown_strategy(frame, night):
    with pytest.raises(AugmentationError, match="Unknown augmentation strategy"):
        augment(frame, "style_transfer", night, CLEAN)


def test_shear_grows_toward_the_top():
    pixels = np.zeros((2, 320, 3), dtype=np.uint8)
    pixels[:, 100] = 255
    sheared = shear_rows(pixels, 32, 1)
    assert np.flatnonzero(sheared[0, :, 0]).tolist() == [132]
    assert np.flatnonzero(sheared[1, :, 0]).tolist() == [116]
    left = shear_rows(pixels, 32, -1)
    assert np.flatnonzero(left[0, :, 0]).tolist() == [68]


def test_edge_band_straddles_boundaries():
    classes = np.zeros((4, 12), dtype=np.uint8)
    classes[:, 5:] = 1
    band = edge_band(classes)
    assert np.flatnonzero(band[0]).tolist() == [3, 4, 5, 6]


def test_mock_and_identity_augmenters(frame, night):
    mock = MockAugmenter("refine", night)
    assert mock.augment(frame, CLEAN).images == augment(frame, "refine", night, CLEAN).images
    identity = IdentityAugmenter().augment(frame, AugmentParams(seed=4))
    assert identity.images == frame.images
    assert identity.seed_used == 4
