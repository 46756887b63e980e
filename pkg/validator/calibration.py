"""Threshold calibration on road masks grouped by the manoeuvre they show."""

import itertools
import logging
import math
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from core.types import ClassId, SemanticMask
from errors import CalibrationError
from simulator.render import Renderer
from simulator.scene import Scene
from simulator.track import TrackModel
from simulator.vehicle import VehicleState
from .octss import octss

logger = logging.getLogger("adstest")

Category = Literal["straight", "left", "right"]
CATEGORIES: Tuple[str, ...] = ("straight", "left", "right")

# Curvature magnitude (1/m) below which the road ahead counts as straight
STRAIGHT_CURVATURE = 0.005


def candidate_thresholds() -> List[float]:
    return [round(0.50 + 0.01 * i, 2) for i in range(50)]


class ScoreSpread(BaseModel):
    count: int
    min: float
    median: float
    max: float

    @classmethod
    def of(cls, scores: Sequence[float]) -> "ScoreSpread":
        if not scores:
            return cls(count=0, min=math.nan, median=math.nan, max=math.nan)
        arr = np.asarray(scores, dtype=np.float64)
        return cls(count=len(scores), min=float(arr.min()), median=float(np.median(arr)),
                   max=float(arr.max()))


class ThresholdRow(BaseModel):
    threshold: float
    # Share of different-category pairs the threshold would accept (lower is better)
    inter_acceptance: float
    # Share of same-category pairs it would reject
    intra_rejection: float


class CalibrationReport(BaseModel):
    n_masks: int
    category_counts: Dict[str, int]
    intra: ScoreSpread
    inter: ScoreSpread
    rows: List[ThresholdRow]
    suggested_threshold: Optional[float] = None

    def row_for(self, threshold: float) -> ThresholdRow:
        for row in self.rows:
            if abs(row.threshold - threshold) < 1e-9:
                return row
        raise KeyError(threshold)


def calibrate_threshold(labeled: Sequence[Tuple[SemanticMask, str]],
                        class_id: int = ClassId.ROAD) -> CalibrationReport:
    """Score every pair of masks and tabulate how each candidate threshold separates categories."""
    if len(labeled) < 2:
        raise CalibrationError(f"Calibration needs at least 2 masks, got {len(labeled)}")
    counts: Dict[str, int] = {}
    for _, category in labeled:
        counts[category] = counts.get(category, 0) + 1
    if len(counts) < 2:
        raise CalibrationError(f"Calibration needs at least 2 categories, got {sorted(counts)}")

    intra: List[float] = []
    inter: List[float] = []
    for (mask_a, cat_a), (mask_b, cat_b) in itertools.combinations(labeled, 2):
        score = octss(mask_a, mask_b, class_id)
        (intra if cat_a == cat_b else inter).append(score)

    intra_arr = np.asarray(intra, dtype=np.float64)
    inter_arr = np.asarray(inter, dtype=np.float64)
    rows = []
    for threshold in candidate_thresholds():
        rows.append(ThresholdRow(
            threshold=threshold,
            inter_acceptance=float(np.mean(inter_arr >= threshold)) if inter else 0.0,
            intra_rejection=float(np.mean(intra_arr < threshold)) if intra else 0.0,
        ))

    suggested = next((row.threshold for row in rows if row.inter_acceptance == 0.0), None)
    if suggested is None:
        logger.warning("No candidate threshold rejects every inter-category pair")
    return CalibrationReport(
        n_masks=len(labeled),
        category_counts=counts,
        intra=ScoreSpread.of(intra),
        inter=ScoreSpread.of(inter),
        rows=rows,
        suggested_threshold=suggested,
    )


def category_ahead(track: TrackModel, s: float, near: float = 2.0, far: float = 18.0) -> str:
    """Label the manoeuvre visible between near and far metres ahead by mean curvature."""
    samples = np.linspace(s + near, s + far, 9)
    curvature = float(np.mean([track.curvature_at(u % track.total_length) for u in samples]))
    if abs(curvature) < STRAIGHT_CURVATURE:
        return "straight"
    return "right" if curvature > 0 else "left"


def collect_calibration_set(track: TrackModel, n: int, seed: int = 0,
                            max_offset: float = 0.3) -> List[Tuple[SemanticMask, str]]:
    """Render ground-truth front masks at random places on the track, roughly balanced over categories."""
    if n < 2:
        raise CalibrationError(f"Calibration needs at least 2 masks, got {n}")
    rng = np.random.default_rng(seed)
    renderer = Renderer(track, Scene())
    per_category = {c: math.ceil(n / len(CATEGORIES)) for c in CATEGORIES}
    labeled: List[Tuple[SemanticMask, str]] = []
    draws = 0
    while len(labeled) < n:
        draws += 1
        if draws > 100 * n:
            raise CalibrationError("Track does not offer enough variety to fill every category")
        s = float(rng.uniform(0.0, track.total_length))
        category = category_ahead(track, s)
        if per_category[category] == 0:
            continue
        x, y, heading = track.pose_at(s)
        offset = float(rng.uniform(-max_offset, max_offset))
        # Shift along the left normal
        x += offset * math.sin(heading)
        y -= offset * math.cos(heading)
        state = VehicleState(x=x, y=y, heading=heading, speed=0.0, s=s, cte=offset)
        labeled.append((renderer.render(state).front.mask, category))
        per_category[category] -= 1
    logger.info(f"Collected {len(labeled)} calibration masks in {draws} draws")
    return labeled
