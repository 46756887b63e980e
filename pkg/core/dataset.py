"""Dataset directories: NNNNNN.ppm / NNNNNN.aug.ppm / NNNNNN.mask.pgm plus manifest.json."""

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional

from pydantic import BaseModel, Field

from errors import AdsTestError, CodecError
from .codecs import decode_pgm, decode_ppm, encode_pgm, encode_ppm
from .types import Image, SemanticMask

logger = logging.getLogger("adstest")

MANIFEST_NAME = "manifest.json"


class SampleEntry(BaseModel):
    index: int
    image: str
    mask: str
    augmented: Optional[str] = None
    domain: Optional[str] = None
    strategy: Optional[str] = None
    seed: Optional[int] = None
    gt_valid: Optional[bool] = None
    # straight / left / right, used by threshold calibration
    category: Optional[str] = None
    sha256: Dict[str, str] = Field(default_factory=dict)


class DatasetManifest(BaseModel):
    domain: Optional[str] = None
    strategy: Optional[str] = None
    seed: Optional[int] = None
    samples: List[SampleEntry] = Field(default_factory=list)


@dataclass(frozen=True)
class Sample:
    entry: SampleEntry
    image: Image
    mask: SemanticMask
    augmented: Optional[Image] = None


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class DatasetWriter:
    """Write samples one by one, then the manifest on close()."""

    def __init__(self, directory: Path, domain: Optional[str] = None,
                 strategy: Optional[str] = None, seed: Optional[int] = None):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.manifest = DatasetManifest(domain=domain, strategy=strategy, seed=seed)

    def __enter__(self) -> "DatasetWriter":
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def __len__(self) -> int:
        return len(self.manifest.samples)

    def _write(self, name: str, data: bytes) -> str:
        (self.directory / name).write_bytes(data)
        return _digest(data)

    def add(self, image: Image, mask: SemanticMask, augmented: Optional[Image] = None,
            seed: Optional[int] = None, gt_valid: Optional[bool] = None,
            category: Optional[str] = None, domain: Optional[str] = None,
            strategy: Optional[str] = None) -> SampleEntry:
        if mask.shape != image.shape:
            raise ValueError(f"Mask {mask.shape} does not match image {image.shape}")
        if augmented is not None and augmented.shape != image.shape:
            raise ValueError(f"Augmented image {augmented.shape} does not match image {image.shape}")

        index = len(self.manifest.samples)
        stem = f"{index:06d}"
        entry = SampleEntry(
            index=index,
            image=f"{stem}.ppm",
            mask=f"{stem}.mask.pgm",
            domain=domain or self.manifest.domain,
            strategy=strategy or self.manifest.strategy,
            seed=seed,
            gt_valid=gt_valid,
            category=category,
        )
        entry.sha256[entry.image] = self._write(entry.image, encode_ppm(image))
        entry.sha256[entry.mask] = self._write(entry.mask, encode_pgm(mask))
        if augmented is not None:
            entry.augmented = f"{stem}.aug.ppm"
            entry.sha256[entry.augmented] = self._write(entry.augmented, encode_ppm(augmented))
        self.manifest.samples.append(entry)
        return entry

    def close(self) -> Path:
        path = self.directory / MANIFEST_NAME
        path.write_text(self.manifest.model_dump_json(indent=2), encoding="utf-8")
        logger.debug(f"Wrote manifest with {len(self)} samples to {path}")
        return path


class Dataset:
    """Read side of a dataset directory. Samples load lazily."""

    def __init__(self, directory: Path, verify: bool = True):
        self.directory = Path(directory)
        path = self.directory / MANIFEST_NAME
        if not path.exists():
            raise AdsTestError(f"No {MANIFEST_NAME} in dataset directory {self.directory}")
        try:
            self.manifest = DatasetManifest.model_validate(json.loads(path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, ValueError) as e:
            raise AdsTestError(f"Invalid manifest {path}: {e}") from e
        self.verify = verify

    def __len__(self) -> int:
        return len(self.manifest.samples)

    def _read(self, entry: SampleEntry, name: str) -> bytes:
        data = (self.directory / name).read_bytes()
        expected = entry.sha256.get(name)
        if self.verify and expected is not None and _digest(data) != expected:
            raise CodecError(f"Content hash mismatch for {self.directory / name}")
        return data

    def load(self, entry: SampleEntry) -> Sample:
        image = decode_ppm(self._read(entry, entry.image))
        mask = decode_pgm(self._read(entry, entry.mask))
        augmented = None
        if entry.augmented:
            augmented = decode_ppm(self._read(entry, entry.augmented))
        return Sample(entry=entry, image=image, mask=mask, augmented=augmented)

    def __iter__(self) -> Iterator[Sample]:
        for entry in self.manifest.samples:
            yield self.load(entry)
