from typing import Iterable, List, Tuple

from pydantic import BaseModel, Field

from errors import MetricError


class ConfusionMatrix(BaseModel):
    """Validator outcomes with valid augmentations as the positive class."""

    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)
    tn: int = Field(default=0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_matrix(self) -> List[List[int]]:
        return [[self.tp, self.fp], [self.fn, self.tn]]

    def cell(self, count: int) -> str:
        pct = 100.0 * count / self.total if self.total else 0.0
        return f"{count} ({pct:.0f}%)"

    def cells(self) -> List[List[str]]:
        return [[self.cell(v) for v in row] for row in self.as_matrix()]

    @property
    def invalid_recall(self) -> float:
        """Share of ground-truth-invalid samples the validator rejected."""
        negatives = self.fp + self.tn
        return self.tn / negatives if negatives else 1.0

    @property
    def valid_recall(self) -> float:
        positives = self.tp + self.fn
        return self.tp / positives if positives else 1.0


def evaluate_validator(samples: Iterable[Tuple[bool, bool]]) -> ConfusionMatrix:
    """Tally (predicted_valid, gt_valid) pairs."""
    matrix = ConfusionMatrix()
    for predicted, actual in samples:
        if actual is None:
            raise MetricError("Sample without a ground-truth validity label")
        if predicted and actual:
            matrix.tp += 1
        elif predicted:
            matrix.fp += 1
        elif actual:
            matrix.fn += 1
        else:
            matrix.tn += 1
    if matrix.total == 0:
        raise MetricError("Cannot evaluate the validator on an empty sample set")
    return matrix
