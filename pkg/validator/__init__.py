from .octss import octss
from .validate import ValidationVerdict, ValidatorConfig, augment_validated, retry_seeds, validate
from .calibration import (
    CalibrationReport,
    ThresholdRow,
    calibrate_threshold,
    category_ahead,
    collect_calibration_set,
)
from .confusion import ConfusionMatrix, evaluate_validator

__all__ = [
    "octss",
    "ValidationVerdict",
    "ValidatorConfig",
    "augment_validated",
    "retry_seeds",
    "validate",
    "CalibrationReport",
    "ThresholdRow",
    "calibrate_threshold",
    "category_ahead",
    "collect_calibration_set",
    "ConfusionMatrix",
    "evaluate_validator",
]
