"""Per-class affine colour student: fitting, checkpoints, selection and runtime use."""

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from augmentation.backends import Augmenter
from augmentation.params import AugmentParams, AugmentationResult
from config import DistillationConfig, config
from core.segment import PaletteSegmenter
from core.types import ClassId, DEFAULT_PALETTE, Frame, Image, Palette
from errors import DistillationError
from .collect import PairDataset
from .features import FrechetStats, frechet_distance

logger = logging.getLogger("adstest")

# Epoch MSE may rise by this much before the epoch is retried with a smaller step
MSE_TOLERANCE = 1e-6
MAX_HALVINGS = 3


@dataclass(frozen=True)
class StudentTransform:
    """Affine maps on [0, 1] channel values, one per class; classes come from palette segmentation."""

    maps: Dict[int, Tuple[np.ndarray, np.ndarray]]
    palette: Palette = DEFAULT_PALETTE

    def __post_init__(self):
        for class_id, (matrix, offset) in self.maps.items():
            if matrix.shape != (3, 3) or offset.shape != (3,):
                raise DistillationError(f"Bad coefficient shapes for class {class_id}")
            if not (np.all(np.isfinite(matrix)) and np.all(np.isfinite(offset))):
                raise DistillationError(f"Non-finite coefficients for class {class_id}")

    @classmethod
    def identity(cls, palette: Palette = DEFAULT_PALETTE) -> "StudentTransform":
        return cls({int(c): (np.eye(3), np.zeros(3)) for c in palette.class_ids}, palette)

    def apply(self, image: Image, segmenter: Optional[PaletteSegmenter] = None) -> Image:
        segmenter = segmenter or PaletteSegmenter.from_palette(self.palette)
        classes = segmenter.segment(image).classes
        values = image.pixels.astype(np.float64) / 255.0
        out = values.copy()
        for class_id, (matrix, offset) in self.maps.items():
            where = classes == class_id
            if where.any():
                out[where] = values[where] @ matrix.T + offset
        return Image(np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8))


def apply_student(student: StudentTransform, image: Image) -> Image:
    return student.apply(image)


class Checkpoint(BaseModel):
    epoch: int = Field(ge=1)
    mse: float = Field(ge=0)
    # Class label -> 12 coefficients: the 3x3 matrix row-major, then the offset
    coefficients: Dict[str, List[float]]
    fd_to_teacher: Optional[float] = None

    @classmethod
    def from_student(cls, epoch: int, mse: float, student: StudentTransform) -> "Checkpoint":
        coefficients = {
            ClassId(c).label: [float(v) for v in np.concatenate([m.ravel(), b])]
            for c, (m, b) in sorted(student.maps.items())
        }
        return cls(epoch=epoch, mse=mse, coefficients=coefficients)

    def student(self, palette: Palette = DEFAULT_PALETTE) -> StudentTransform:
        maps = {}
        for label, values in self.coefficients.items():
            if len(values) != 12:
                raise DistillationError(f"Class '{label}' has {len(values)} coefficients, expected 12")
            arr = np.asarray(values, dtype=np.float64)
            maps[int(ClassId.from_label(label))] = (arr[:9].reshape(3, 3), arr[9:])
        return StudentTransform(maps, palette)

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Path) -> "Checkpoint":
        path = Path(path)
        if not path.exists():
            raise DistillationError(f"Checkpoint not found: {path}")
        try:
            return cls.model_validate(json.loads(path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, ValueError) as e:
            raise DistillationError(f"Invalid checkpoint {path}: {e}") from e


def checkpoint_name(epoch: int) -> str:
    return f"checkpoint-epoch-{epoch:02d}.json"


def load_checkpoints(directory: Path) -> List[Checkpoint]:
    paths = sorted(Path(directory).glob("checkpoint-epoch-*.json"))
    if not paths:
        raise DistillationError(f"No checkpoints in {directory}")
    return [Checkpoint.load(p) for p in paths]


def sample_pixels(dataset: PairDataset, per_class: int, seed: int,
                  palette: Palette = DEFAULT_PALETTE) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
    """Stratified (input, target) colour samples on [0, 1], up to per_class pixels per class per pair."""
    rng = np.random.default_rng(seed)
    segmenter = PaletteSegmenter.from_palette(palette)
    inputs: Dict[int, List[np.ndarray]] = {}
    targets: Dict[int, List[np.ndarray]] = {}
    for original, augmented in dataset.pairs:
        classes = segmenter.segment(original).classes.ravel()
        src = original.pixels.reshape(-1, 3)
        dst = augmented.pixels.reshape(-1, 3)
        for class_id in np.unique(classes):
            where = np.flatnonzero(classes == class_id)
            if where.size > per_class:
                where = np.sort(rng.choice(where, size=per_class, replace=False))
            inputs.setdefault(int(class_id), []).append(src[where])
            targets.setdefault(int(class_id), []).append(dst[where])
    return {
        c: (np.concatenate(inputs[c]).astype(np.float64) / 255.0,
            np.concatenate(targets[c]).astype(np.float64) / 255.0)
        for c in sorted(inputs)
    }


class _ClassFit:
    """Gradient descent on y = A z + d over standardized inputs z = (x - mu) / sigma."""

    def __init__(self, x: np.ndarray, y: np.ndarray):
        self.mu = x.mean(axis=0)
        sigma = x.std(axis=0)
        self.sigma = np.where(sigma > 0, sigma, 1.0)
        self.z = (x - self.mu) / self.sigma
        self.y = y
        # Identity in raw coordinates
        self.A = np.diag(self.sigma)
        self.d = self.mu.copy()

    def sse(self) -> float:
        r = self.z @ self.A.T + self.d - self.y
        return float(np.sum(r * r))

    def epoch(self, order: np.ndarray, batch_size: int, lr: float) -> None:
        for start in range(0, order.size, batch_size):
            idx = order[start:start + batch_size]
            z, y = self.z[idx], self.y[idx]
            r = z @ self.A.T + self.d - y
            self.A = self.A - lr * 2.0 * r.T @ z
            self.d = self.d - lr * 2.0 * r.sum(axis=0)

    def raw(self) -> Tuple[np.ndarray, np.ndarray]:
        matrix = self.A / self.sigma[None, :]
        return matrix, self.d - matrix @ self.mu


def fit_student(dataset: PairDataset, n_epochs: Optional[int] = None, seed: int = 0,
                settings: DistillationConfig = config.distill,
                palette: Palette = DEFAULT_PALETTE) -> List[Checkpoint]:
    """One checkpoint per epoch of mini-batch descent on per-class squared colour error.

    An epoch whose MSE rises is rerun from the previous parameters with half the
    learning rate; after the last halving the previous parameters are kept.
    """
    n_epochs = settings.epochs if n_epochs is None else n_epochs
    if len(dataset) == 0:
        raise DistillationError("Cannot fit a student on an empty dataset")
    if n_epochs < 1:
        raise DistillationError(f"n_epochs must be >= 1, got {n_epochs}")

    samples = sample_pixels(dataset, settings.pixels_per_class, seed, palette)
    fits = {c: _ClassFit(x, y) for c, (x, y) in samples.items()}
    n_values = 3 * sum(f.z.shape[0] for f in fits.values())
    rng = np.random.default_rng(seed)
    lr = settings.learning_rate

    def mse() -> float:
        return sum(f.sse() for f in fits.values()) / n_values

    def student() -> StudentTransform:
        maps = {int(c): (np.eye(3), np.zeros(3)) for c in palette.class_ids}
        maps.update({c: f.raw() for c, f in fits.items()})
        return StudentTransform(maps, palette)

    previous = mse()
    checkpoints: List[Checkpoint] = []
    for epoch in range(1, n_epochs + 1):
        orders = {c: rng.permutation(f.z.shape[0]) for c, f in fits.items()}
        saved = {c: (f.A.copy(), f.d.copy()) for c, f in fits.items()}
        for attempt in range(MAX_HALVINGS + 1):
            for c, f in fits.items():
                f.epoch(orders[c], settings.batch_size, lr)
            current = mse()
            if current <= previous + MSE_TOLERANCE:
                break
            for c, f in fits.items():
                f.A, f.d = (v.copy() for v in saved[c])
            if attempt == MAX_HALVINGS:
                logger.warning(f"Epoch {epoch}: MSE kept rising, keeping the previous parameters")
                current = previous
                break
            lr /= 2.0
            logger.info(f"Epoch {epoch}: MSE rose to {current:.3e}, retrying with learning rate {lr:.2e}")
        previous = min(previous, current)
        checkpoints.append(Checkpoint.from_student(epoch, current, student()))
        logger.info(f"Epoch {epoch}/{n_epochs}: mse={current:.3e}")
    return checkpoints


def select_checkpoint(checkpoints: Sequence[Checkpoint], teacher_outputs: Sequence[Image],
                      holdout_originals: Sequence[Image],
                      palette: Palette = DEFAULT_PALETTE) -> Checkpoint:
    """Checkpoint whose outputs on the holdout are closest in Fréchet distance to the teacher's.

    Every checkpoint gets fd_to_teacher filled in. Ties go to the earliest epoch.
    """
    if not checkpoints:
        raise DistillationError("No checkpoints to select from")
    if not holdout_originals or not teacher_outputs:
        raise DistillationError("Checkpoint selection needs a non-empty holdout set")
    teacher_stats = FrechetStats.from_images(teacher_outputs)
    segmenter = PaletteSegmenter.from_palette(palette)

    best: Optional[Checkpoint] = None
    for checkpoint in sorted(checkpoints, key=lambda c: c.epoch):
        student = checkpoint.student(palette)
        outputs = [student.apply(image, segmenter) for image in holdout_originals]
        checkpoint.fd_to_teacher = frechet_distance(FrechetStats.from_images(outputs), teacher_stats)
        logger.debug(f"Epoch {checkpoint.epoch}: FD {checkpoint.fd_to_teacher:.6f}")
        if best is None or checkpoint.fd_to_teacher < best.fd_to_teacher:
            best = checkpoint
    return best


class StudentAugmenter(Augmenter):
    """Runs a fitted student on every view in place of the teacher."""

    strategy = "student"

    def __init__(self, student: StudentTransform):
        self.student = student
        self.segmenter = PaletteSegmenter.from_palette(student.palette)

    @classmethod
    def from_checkpoint(cls, path: Path, palette: Palette = DEFAULT_PALETTE) -> "StudentAugmenter":
        return cls(Checkpoint.load(path).student(palette))

    def augment(self, frame: Frame, params: AugmentParams) -> AugmentationResult:
        start = time.perf_counter()
        images = [self.student.apply(image, self.segmenter) for image in frame.images]
        return AugmentationResult(images=images, elapsed_ms=(time.perf_counter() - start) * 1000.0,
                                  seed_used=params.seed, strategy=self.strategy)
