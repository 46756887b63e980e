"""Linear autoencoder (PCA) scoring how far images sit from the training distribution."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Tuple

import numpy as np
from sklearn.decomposition import PCA

from core.types import Image
from errors import DistanceModelError

logger = logging.getLogger("adstest")

INPUT_SHAPE = (20, 40)
DEFAULT_COMPONENTS = 16


def downsample(image: Image, shape: Tuple[int, int] = INPUT_SHAPE) -> np.ndarray:
    """Grayscale on [0, 1], box-averaged onto `shape`, flattened row-major."""
    rows, cols = shape
    if image.height < rows or image.width < cols:
        raise DistanceModelError(f"Image {image.shape} is smaller than the model input {shape}")
    gray = image.luma() / 255.0
    row_edges = np.linspace(0, image.height, rows + 1).astype(int)
    col_edges = np.linspace(0, image.width, cols + 1).astype(int)
    sums = np.add.reduceat(np.add.reduceat(gray, row_edges[:-1], axis=0), col_edges[:-1], axis=1)
    counts = np.outer(np.diff(row_edges), np.diff(col_edges))
    return (sums / counts).ravel()


@dataclass(frozen=True)
class DistanceModel:
    mean: np.ndarray
    # k x n_pixels, orthonormal rows
    components: np.ndarray
    shape: Tuple[int, int] = INPUT_SHAPE

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def vector_error(self, vector: np.ndarray) -> float:
        """Mean squared residual of an input vector after projection onto the component span."""
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != self.mean.shape:
            raise DistanceModelError(f"Expected a vector of {self.mean.size} values, got {vector.shape}")
        centered = vector - self.mean
        residual = centered - (centered @ self.components.T) @ self.components
        return float(np.mean(residual * residual))

    def save(self, path: Path) -> Path:
        path = Path(path)
        payload = {
            "shape": list(self.shape),
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
        }
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Path) -> "DistanceModel":
        path = Path(path)
        if not path.exists():
            raise DistanceModelError(f"Distance model not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            mean = np.asarray(data["mean"], dtype=np.float64)
            components = np.asarray(data["components"], dtype=np.float64).reshape(-1, mean.size)
            shape = tuple(data["shape"])
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
            raise DistanceModelError(f"Invalid distance model {path}: {e}") from e
        return cls(mean=mean, components=components, shape=shape)


def fit_vectors(vectors: np.ndarray, k: int = DEFAULT_COMPONENTS,
                shape: Tuple[int, int] = INPUT_SHAPE) -> DistanceModel:
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    n = vectors.shape[0]
    if k < 0:
        raise DistanceModelError(f"k must be >= 0, got {k}")
    if n == 0 or k > min(vectors.shape):
        raise DistanceModelError(f"Cannot fit {k} components to {n} samples of {vectors.shape[1]} values")
    if k == 0:
        return DistanceModel(mean=vectors.mean(axis=0), components=np.zeros((0, vectors.shape[1])), shape=shape)
    pca = PCA(n_components=k, svd_solver="full").fit(vectors)
    logger.debug(f"Distance model: top singular values {np.round(pca.singular_values_[:5], 4).tolist()}")
    return DistanceModel(mean=pca.mean_, components=pca.components_.copy(), shape=shape)


def fit_distance_model(training_images: Sequence[Image], k: int = DEFAULT_COMPONENTS) -> DistanceModel:
    if not training_images:
        raise DistanceModelError("No training images")
    return fit_vectors(np.stack([downsample(image) for image in training_images]), k)


def reconstruction_error(model: DistanceModel, image: Image) -> float:
    return model.vector_error(downsample(image, model.shape))


def mean_error(model: DistanceModel, images: Iterable[Image]) -> Tuple[float, int]:
    errors = [reconstruction_error(model, image) for image in images]
    if not errors:
        raise DistanceModelError("Cannot score an empty image set")
    return float(np.mean(errors)), len(errors)
