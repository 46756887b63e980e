from .features import FrechetStats, feature_vector, features_of, frechet_distance
from .collect import PairDataset, collect_pairs
from .student import (
    Checkpoint,
    StudentAugmenter,
    StudentTransform,
    apply_student,
    checkpoint_name,
    fit_student,
    load_checkpoints,
    select_checkpoint,
)

__all__ = [
    "FrechetStats",
    "feature_vector",
    "features_of",
    "frechet_distance",
    "PairDataset",
    "collect_pairs",
    "Checkpoint",
    "StudentAugmenter",
    "StudentTransform",
    "apply_student",
    "checkpoint_name",
    "fit_student",
    "load_checkpoints",
    "select_checkpoint",
]
