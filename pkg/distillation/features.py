"""Colour-statistics features and the Fréchet distance between image sets."""

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg

from core.types import Image
from errors import DistillationError

HIST_BINS = 8
FEATURE_DIM = 3 * (2 + HIST_BINS)
REGULARIZATION = 1e-6
# Eigenvalues between this and zero are rounding noise; anything lower is an error
NEGATIVE_TOLERANCE = -1e-8


def feature_vector(image: Image) -> np.ndarray:
    """Per channel (R, G, B): mean, std and an 8-bin normalized histogram, all on a [0, 1] scale."""
    pixels = image.pixels.reshape(-1, 3)
    values = pixels.astype(np.float64) / 255.0
    parts = []
    for channel in range(3):
        hist = np.bincount(pixels[:, channel] // (256 // HIST_BINS), minlength=HIST_BINS)
        parts.append([values[:, channel].mean(), values[:, channel].std()])
        parts.append(hist / pixels.shape[0])
    return np.concatenate(parts)


def features_of(images: Iterable[Image]) -> np.ndarray:
    rows = [feature_vector(image) for image in images]
    if not rows:
        raise DistillationError("Cannot compute features of an empty image set")
    return np.stack(rows)


@dataclass(frozen=True)
class FrechetStats:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if self.mu.ndim != 1 or self.sigma.shape != (self.mu.size, self.mu.size):
            raise DistillationError(f"Inconsistent stats shapes {self.mu.shape} and {self.sigma.shape}")

    @classmethod
    def from_features(cls, features: np.ndarray, eps: float = REGULARIZATION) -> "FrechetStats":
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.shape[0] == 0:
            raise DistillationError("Cannot fit Fréchet stats to zero samples")
        mu = features.mean(axis=0)
        if features.shape[0] > 1:
            sigma = np.atleast_2d(np.cov(features, rowvar=False))
        else:
            sigma = np.zeros((mu.size, mu.size))
        return cls(mu=mu, sigma=sigma + eps * np.eye(mu.size))

    @classmethod
    def from_images(cls, images: Iterable[Image]) -> "FrechetStats":
        return cls.from_features(features_of(images))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = scipy.linalg.eigh((matrix + matrix.T) / 2.0)
    if eigvals.min() < NEGATIVE_TOLERANCE:
        raise DistillationError(f"Matrix is not positive semidefinite (eigenvalue {eigvals.min():.3e})")
    return (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T


def frechet_distance(a: FrechetStats, b: FrechetStats) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))."""
    if a.mu.shape != b.mu.shape:
        raise DistillationError(f"Feature dimensions differ: {a.mu.size} vs {b.mu.size}")
    for stats in (a, b):
        if not (np.all(np.isfinite(stats.mu)) and np.all(np.isfinite(stats.sigma))):
            raise DistillationError("Fréchet stats contain non-finite values")

    # Tr((S_a S_b)^(1/2)) = Tr((S_a^(1/2) S_b S_a^(1/2))^(1/2)), and the latter is symmetric
    root_a = _psd_sqrt(a.sigma)
    inner = root_a @ b.sigma @ root_a
    eigvals = scipy.linalg.eigvalsh((inner + inner.T) / 2.0)
    if eigvals.min() < NEGATIVE_TOLERANCE:
        raise DistillationError(f"Covariance product has eigenvalue {eigvals.min():.3e}")
    trace_sqrt = float(np.sum(np.sqrt(np.clip(eigvals, 0.0, None))))

    diff = a.mu - b.mu
    distance = float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * trace_sqrt)
    return max(distance, 0.0)
