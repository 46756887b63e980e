import json
import logging
import math
import os
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import config
from core.segment import ColourPathSegmenter
from core.types import ClassId, DEFAULT_PALETTE, Palette, RGB
from errors import ConfigError

logger = logging.getLogger("adstest")


class ToneTransform(BaseModel):
    """Global affine colour transform: out = matrix @ rgb + offset."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    matrix: Tuple[Tuple[float, float, float], Tuple[float, float, float], Tuple[float, float, float]] = (
        (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    offset: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    @model_validator(mode="after")
    def _finite(self):
        values = [v for row in self.matrix for v in row] + list(self.offset)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("tone matrix and offset must be finite")
        return self

    def apply_float(self, pixels: np.ndarray) -> np.ndarray:
        """Unrounded transform of an (..., 3) array."""
        matrix = np.asarray(self.matrix, dtype=np.float64)
        return pixels.astype(np.float64) @ matrix.T + np.asarray(self.offset, dtype=np.float64)

    def apply(self, pixels: np.ndarray) -> np.ndarray:
        return np.clip(np.rint(self.apply_float(pixels)), 0, 255).astype(np.uint8)

    def apply_color(self, color: RGB) -> RGB:
        out = self.apply(np.asarray(color, dtype=np.uint8)[None, :])[0]
        return tuple(int(v) for v in out)


class DomainSpec(BaseModel):
    """A target operational design domain."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    description: str = ""
    category: str = ""
    per_class_color: Dict[str, Tuple[int, int, int]]
    tone: ToneTransform = Field(default_factory=ToneTransform)

    @field_validator("per_class_color")
    @classmethod
    def _covers_all_classes(cls, value: Dict[str, Tuple[int, int, int]]):
        labels = {c.label for c in ClassId}
        unknown = set(value) - labels
        if unknown:
            raise ValueError(f"unknown classes {sorted(unknown)}")
        missing = labels - set(value)
        if missing:
            raise ValueError(f"per_class_color misses classes {sorted(missing)}")
        for label, color in value.items():
            if any(c < 0 or c > 255 for c in color):
                raise ValueError(f"colour for '{label}' outside [0, 255]")
        return value

    def target(self, class_id: int) -> RGB:
        return tuple(self.per_class_color[ClassId(class_id).label])

    def target_table(self) -> np.ndarray:
        """256x3 lookup from class index to target colour."""
        table = np.zeros((256, 3), dtype=np.uint8)
        for class_id in ClassId:
            table[int(class_id)] = self.target(class_id)
        return table

    def colour_paths(self, palette: Palette = DEFAULT_PALETTE):
        """Colour segments every augmentation of this domain can produce, per class.

        nominal -> tone(nominal) covers tone-mapped and refined preserved pixels,
        target -> tone(nominal) covers inpainted and refined regenerated ones.
        """
        paths = []
        for class_id, nominal in palette.entries.items():
            toned = self.tone.apply_color(nominal)
            paths.append((int(class_id), nominal, toned))
            paths.append((int(class_id), self.target(class_id), toned))
        return paths

    def segmenter(self, palette: Palette = DEFAULT_PALETTE) -> ColourPathSegmenter:
        return ColourPathSegmenter(self.colour_paths(palette), [int(c) for c in palette.class_ids])


# Domains keyed by ODD category, loaded from the catalogue file
DOMAIN_CATEGORIES: Dict[str, List[DomainSpec]] = {}


def _parse_catalogue(data: dict) -> Dict[str, List[DomainSpec]]:
    try:
        return {
            category: [DomainSpec(category=category, **domain) for domain in domains]
            for category, domains in data.items()
        }
    except (ValidationError, TypeError) as e:
        raise ConfigError(f"Invalid domain catalogue: {e}") from e


def load_catalogue(path: Optional[str] = None) -> Dict[str, List[DomainSpec]]:
    """Load the domain catalogue from `path`, the configured file, or the one next to the package."""
    global DOMAIN_CATEGORIES
    package_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates = [path] if path else [config.augment.domains_file,
                                      os.path.join(package_dir, "domains.json")]
    for candidate in candidates:
        if candidate and os.path.exists(candidate):
            try:
                with open(candidate, "r", encoding="utf-8") as f:
                    data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"Invalid JSON in domain catalogue {candidate}: {e}") from e
            DOMAIN_CATEGORIES = _parse_catalogue(data)
            logger.debug(f"Loaded {len(get_all_domains())} domains from {candidate}")
            return DOMAIN_CATEGORIES
    raise ConfigError(f"No domain catalogue found (looked in: {', '.join(c for c in candidates if c)})")


def _catalogue() -> Dict[str, List[DomainSpec]]:
    if not DOMAIN_CATEGORIES:
        load_catalogue()
    return DOMAIN_CATEGORIES


def get_available_categories() -> List[str]:
    return list(_catalogue().keys())


def get_domains_by_category(category: str) -> List[DomainSpec]:
    return _catalogue().get(category, [])


def get_all_domains() -> List[DomainSpec]:
    return [domain for domains in _catalogue().values() for domain in domains]


def get_domain(name: str) -> DomainSpec:
    for domain in get_all_domains():
        if domain.name == name:
            return domain
    raise ConfigError(f"Unknown domain '{name}' (available: {', '.join(d.name for d in get_all_domains())})")
