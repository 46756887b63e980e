"""Procedural stand-ins for the three diffusion-based augmentation strategies.

Each strategy is a pure function of (frame, domain, params, seed). Mocks
attach a ground-truth validity flag: True unless a seeded corruption draw
deformed the road geometry.
"""

import logging
import time
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from core.types import ClassId, Frame, Image
from errors import AugmentationError
from .domains import DomainSpec
from .params import AugmentParams, AugmentationResult

logger = logging.getLogger("adstest")

JITTER = 8
SHEAR_RANGE = (10, 40)
# Reference width the shear range is expressed in
SHEAR_WIDTH = 320
EDGE_RADIUS = 2
DEFAULT_PRESERVED = frozenset({int(ClassId.ROAD)})


def _clamp01(value: float) -> float:
    return float(min(1.0, max(0.0, value)))


def instruction_corrupt_prob(params: AugmentParams) -> float:
    base = params.base_prob("instruction")
    return _clamp01(base * params.text_guidance / 10.0 * 2.0 / max(params.image_guidance, 0.1))


def refine_corrupt_prob(params: AugmentParams) -> float:
    return _clamp01(params.base_prob("refine") * params.noise_level / 0.5)


def _rngs(seed: int, n_views: int) -> Tuple[np.random.Generator, List[np.random.Generator]]:
    """One generator for frame-level draws plus one per view for pixel noise."""
    children = np.random.SeedSequence(seed).spawn(1 + n_views)
    return np.random.default_rng(children[0]), [np.random.default_rng(c) for c in children[1:]]


def _draw_shear(rng: np.random.Generator) -> Tuple[int, int]:
    magnitude = int(rng.integers(SHEAR_RANGE[0], SHEAR_RANGE[1] + 1))
    sign = 1 if rng.random() < 0.5 else -1
    return magnitude, sign


def shear_rows(pixels: np.ndarray, magnitude: int, sign: int) -> np.ndarray:
    """Shift each row sideways; the shift grows from half the magnitude (bottom) to all of it (top).

    Vacated pixels repeat the row's edge pixel.
    """
    height, width = pixels.shape[:2]
    scaled = magnitude * width / SHEAR_WIDTH
    rows = np.arange(height)
    if height > 1:
        growth = 0.5 + 0.5 * (height - 1 - rows) / (height - 1)
    else:
        growth = np.ones(1)
    offsets = np.rint(scaled * growth).astype(np.int64) * sign
    source = np.clip(np.arange(width)[None, :] - offsets[:, None], 0, width - 1)
    return pixels[rows[:, None], source]


def _check_preserved(preserved: Iterable[int], declared) -> frozenset:
    preserved = frozenset(int(c) for c in preserved)
    stray = preserved - frozenset(declared)
    if stray:
        raise AugmentationError(f"Preserved classes {sorted(stray)} are not declared by the mask")
    return preserved


def _require_masks(frame: Frame, strategy: str):
    masks = frame.masks
    if any(m is None for m in masks):
        raise AugmentationError(f"{strategy} needs ground-truth masks for every view")
    return masks


def augment_instruction(frame: Frame, domain: DomainSpec, params: AugmentParams) -> AugmentationResult:
    start = time.perf_counter()
    rng, _ = _rngs(params.seed, len(frame.views))
    corrupt = rng.random() < instruction_corrupt_prob(params)
    magnitude, sign = _draw_shear(rng)

    images = []
    for view in frame.views:
        out = domain.tone.apply(view.image.pixels)
        if corrupt:
            out = shear_rows(out, magnitude, sign)
        images.append(Image(out))

    return AugmentationResult(
        images=images,
        elapsed_ms=(time.perf_counter() - start) * 1000.0,
        seed_used=params.seed,
        gt_valid=not corrupt,
        strategy="instruction",
    )


def _inpaint_view(pixels: np.ndarray, classes: np.ndarray, domain: DomainSpec,
                  preserved: frozenset, rng: np.random.Generator) -> np.ndarray:
    regenerate = ~np.isin(classes, list(preserved))
    jitter = rng.integers(-JITTER, JITTER + 1, size=pixels.shape)
    recolored = domain.target_table()[classes].astype(np.int64) + jitter
    out = pixels.copy()
    out[regenerate] = np.clip(recolored[regenerate], 0, 255).astype(np.uint8)
    return out


def _erode_road(out: np.ndarray, classes: np.ndarray, domain: DomainSpec,
                rng: np.random.Generator) -> np.ndarray:
    """Eat into the road border, painting the lost strip with roadside colour."""
    width = classes.shape[1]
    depth = max(3, int(round(0.03 * width)))
    road = classes == int(ClassId.ROAD)
    kept = ndimage.binary_erosion(road, iterations=depth)
    lost = road & ~kept
    jitter = rng.integers(-JITTER, JITTER + 1, size=out.shape)
    background = np.asarray(domain.target(ClassId.BACKGROUND), dtype=np.int64)
    painted = np.clip(background[None, None, :] + jitter, 0, 255).astype(np.uint8)
    out = out.copy()
    out[lost] = painted[lost]
    return out


def augment_inpaint(frame: Frame, domain: DomainSpec, params: AugmentParams,
                    preserved_classes: Iterable[int] = DEFAULT_PRESERVED) -> AugmentationResult:
    start = time.perf_counter()
    masks = _require_masks(frame, "inpaint")
    rng, view_rngs = _rngs(params.seed, len(frame.views))
    corrupt = rng.random() < _clamp01(params.base_prob("inpaint"))

    images = []
    for view, mask, view_rng in zip(frame.views, masks, view_rngs):
        preserved = _check_preserved(preserved_classes, mask.declared)
        out = _inpaint_view(view.image.pixels, mask.classes, domain, preserved, view_rng)
        if corrupt:
            out = _erode_road(out, mask.classes, domain, view_rng)
        images.append(Image(out))

    return AugmentationResult(
        images=images,
        elapsed_ms=(time.perf_counter() - start) * 1000.0,
        seed_used=params.seed,
        gt_valid=not corrupt,
        strategy="inpaint",
    )


def edge_band(classes: np.ndarray, radius: int = EDGE_RADIUS) -> np.ndarray:
    """Pixels within `radius` (Chebyshev) of a class boundary."""
    size = 2 * radius + 1
    high = ndimage.maximum_filter(classes, size=size, mode="nearest")
    low = ndimage.minimum_filter(classes, size=size, mode="nearest")
    return high != low


def augment_refine(frame: Frame, domain: DomainSpec, params: AugmentParams,
                   preserved_classes: Iterable[int] = DEFAULT_PRESERVED) -> AugmentationResult:
    start = time.perf_counter()
    masks = _require_masks(frame, "refine")
    rng, view_rngs = _rngs(params.seed, len(frame.views))
    corrupt = rng.random() < refine_corrupt_prob(params)
    magnitude, sign = _draw_shear(rng)
    nu = params.noise_level

    images = []
    for view, mask, view_rng in zip(frame.views, masks, view_rngs):
        preserved = _check_preserved(preserved_classes, mask.declared)
        inpainted = _inpaint_view(view.image.pixels, mask.classes, domain, preserved, view_rng)
        if nu == 0.0:
            out = inpainted
        else:
            toned = domain.tone.apply_float(view.image.pixels)
            weight = np.where(edge_band(mask.classes), nu / 4.0, nu)[:, :, None]
            blended = (1.0 - weight) * inpainted + weight * toned
            out = np.clip(np.rint(blended), 0, 255).astype(np.uint8)
        if corrupt:
            out = shear_rows(out, magnitude, sign)
        images.append(Image(out))

    return AugmentationResult(
        images=images,
        elapsed_ms=(time.perf_counter() - start) * 1000.0,
        seed_used=params.seed,
        gt_valid=not corrupt,
        strategy="refine",
    )


def augment(frame: Frame, strategy: str, domain: DomainSpec, params: AugmentParams,
            preserved_classes: Optional[Iterable[int]] = None) -> AugmentationResult:
    """Dispatch to one of the mock strategies by name."""
    preserved = DEFAULT_PRESERVED if preserved_classes is None else preserved_classes
    if strategy == "instruction":
        return augment_instruction(frame, domain, params)
    if strategy == "inpaint":
        return augment_inpaint(frame, domain, params, preserved)
    if strategy == "refine":
        return augment_refine(frame, domain, params, preserved)
    raise AugmentationError(f"Unknown augmentation strategy '{strategy}'")
