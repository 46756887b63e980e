import logging
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from augmentation.backends import Augmenter
from augmentation.params import AugmentParams, AugmentationResult
from config import config
from core.segment import PaletteSegmenter, Segmenter
from core.types import ClassId, DEFAULT_PALETTE, Frame, Image, URBAN_CLASSES
from errors import AugmentationError, SegmenterError
from .octss import octss

logger = logging.getLogger("adstest")


@dataclass
class ValidatorConfig:
    threshold: float = field(default_factory=lambda: config.validator.threshold)
    checked_classes: FrozenSet[int] = frozenset({int(ClassId.ROAD)})
    max_retries: int = field(default_factory=lambda: config.validator.max_retries)
    segmenter: Segmenter = field(default_factory=lambda: PaletteSegmenter.from_palette(DEFAULT_PALETTE))

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        self.checked_classes = frozenset(int(c) for c in self.checked_classes)
        if not self.checked_classes:
            raise ValueError("checked_classes must not be empty")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")

    @classmethod
    def urban(cls, **kwargs) -> "ValidatorConfig":
        return cls(checked_classes=frozenset(int(c) for c in URBAN_CLASSES), **kwargs)


@dataclass
class ValidationVerdict:
    # Worst score over views, per checked class
    per_class_score: Dict[int, float]
    valid: bool
    elapsed_ms: float

    @property
    def min_score(self) -> float:
        return min(self.per_class_score.values())

    def summary(self) -> str:
        scores = ", ".join(f"{ClassId(c).label}={s:.3f}" for c, s in sorted(self.per_class_score.items()))
        return f"{'valid' if self.valid else 'invalid'} ({scores})"


def validate(original: Frame, augmented: List[Image], cfg: ValidatorConfig) -> ValidationVerdict:
    """Segment each augmented view and compare it with the original view's ground-truth mask."""
    start = time.perf_counter()
    if len(augmented) != len(original.views):
        raise AugmentationError(f"Expected {len(original.views)} augmented views, got {len(augmented)}")

    scores: Dict[int, float] = {c: 1.0 for c in cfg.checked_classes}
    for view, image in zip(original.views, augmented):
        if view.mask is None:
            raise AugmentationError(f"View '{view.name}' has no ground-truth mask to validate against")
        if image.shape != view.mask.shape:
            raise AugmentationError(f"Augmented view '{view.name}' is {image.shape}, "
                                    f"expected {view.mask.shape}")
        try:
            predicted = cfg.segmenter.segment(image)
        except SegmenterError:
            raise
        except Exception as e:
            raise SegmenterError(f"Segmenter failed on view '{view.name}': {e}") from e
        for class_id in cfg.checked_classes:
            scores[class_id] = min(scores[class_id], octss(predicted, view.mask, class_id))

    valid = all(score >= cfg.threshold for score in scores.values())
    return ValidationVerdict(per_class_score=scores, valid=valid,
                             elapsed_ms=(time.perf_counter() - start) * 1000.0)


def retry_seeds(seed: int, count: int) -> List[int]:
    """Fresh seeds for regeneration attempts after the first."""
    seeds = []
    for child in np.random.SeedSequence(seed).spawn(count):
        low, high = child.generate_state(2, np.uint32)
        seeds.append(int(low) | (int(high) << 32))
    return seeds


def augment_validated(frame: Frame, augmenter: Augmenter, params: AugmentParams,
                      cfg: ValidatorConfig) -> Tuple[AugmentationResult, ValidationVerdict, int]:
    """Augment until the result validates or the retry budget runs out.

    The first attempt uses params.seed. On exhaustion the original images pass
    through with fallback=True. Elapsed time covers every attempt.
    """
    start = time.perf_counter()
    seeds = [params.seed] + retry_seeds(params.seed, cfg.max_retries)
    attempts_ms: List[float] = []
    validate_ms = 0.0
    verdict: Optional[ValidationVerdict] = None

    for attempt, seed in enumerate(seeds):
        result = augmenter.augment(frame, params.with_seed(seed))
        attempts_ms.append(result.elapsed_ms)
        verdict = validate(frame, result.images, cfg)
        validate_ms += verdict.elapsed_ms
        if verdict.valid:
            result.retries = attempt
            result.attempts_ms = attempts_ms
            result.validate_ms = validate_ms
            result.elapsed_ms = (time.perf_counter() - start) * 1000.0
            if attempt:
                logger.debug(f"Frame {frame.step}: valid after {attempt} retries")
            return result, verdict, attempt
        logger.debug(f"Frame {frame.step}: attempt {attempt} rejected, {verdict.summary()}")

    retries = len(seeds) - 1
    logger.warning(f"Frame {frame.step}: no valid {augmenter.strategy} augmentation after "
                   f"{retries} retries, passing the original frame through")
    fallback = AugmentationResult(
        images=frame.images,
        elapsed_ms=(time.perf_counter() - start) * 1000.0,
        seed_used=seeds[-1],
        retries=retries,
        gt_valid=None,
        fallback=True,
        strategy=augmenter.strategy,
        validate_ms=validate_ms,
        attempts_ms=attempts_ms,
    )
    return fallback, verdict, retries
