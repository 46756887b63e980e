"""Per-class semantic similarity between two masks (intersection over union)."""

import numpy as np

from core.types import SemanticMask


def octss(mask_a: SemanticMask, mask_b: SemanticMask, class_id: int) -> float:
    """|A & B| / |A | B| over the pixels of one class; 1.0 when the class is absent from both."""
    if mask_a.shape != mask_b.shape:
        raise ValueError(f"Mask dimensions differ: {mask_a.shape} vs {mask_b.shape}")
    a = mask_a.binary(class_id)
    b = mask_b.binary(class_id)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a & b)) / union
