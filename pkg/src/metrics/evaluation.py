"""
Landmark registration errors and their aggregates
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..core.errors import EvaluationError
from ..imaging.maps import CoordinateMap, map_points
from .landmarks import LandmarkSet

logger = logging.getLogger(__name__)

DEFAULT_PIXEL_SIZE_UM = 0.25

Point = Sequence[float]


def _diagonal(image_dims: Tuple[int, int]) -> float:
    w, h = image_dims
    if w < 1 or h < 1:
        raise ValueError(f"Image dims must be at least 1x1, got {image_dims}")
    return math.hypot(w, h)


def rtre(estimated: Point, truth: Point, image_dims: Tuple[int, int]) -> float:
    """Distance between estimate and truth relative to the image diagonal"""
    return math.hypot(estimated[0] - truth[0], estimated[1] - truth[1]) / _diagonal(image_dims)


def rire(initial_i: Point, truth_j: Point, image_dims: Tuple[int, int]) -> float:
    """Relative error before registration; same formula as rtre"""
    return rtre(initial_i, truth_j, image_dims)


def _mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


@dataclass
class PairEvaluation:
    """Per-landmark errors of one image pair and their statistics"""
    pair: Tuple[str, str]
    rtre_per_landmark: Dict[str, float]
    rire_per_landmark: Dict[str, float]
    distance_per_landmark: Dict[str, float]
    median_rtre: float
    mean_rtre: float
    max_rtre: float
    robustness: float
    mean_distance: float

    @property
    def improved_count(self) -> int:
        return sum(1 for lid, e in self.rtre_per_landmark.items() if e < self.rire_per_landmark[lid])

    @property
    def landmark_count(self) -> int:
        return len(self.rtre_per_landmark)

    def summary(self, pixel_size_um: float = DEFAULT_PIXEL_SIZE_UM) -> Dict[str, Any]:
        return {
            "fixed_id": self.pair[0],
            "moving_id": self.pair[1],
            "landmarks": self.landmark_count,
            "improved": self.improved_count,
            "median_rtre": self.median_rtre,
            "mean_rtre": self.mean_rtre,
            "max_rtre": self.max_rtre,
            "robustness": self.robustness,
            "mean_distance_px": self.mean_distance,
            "mean_distance_um": self.mean_distance * pixel_size_um
        }


def evaluate_pair(
    landmarks_i: LandmarkSet,
    landmarks_j: LandmarkSet,
    coordinate_map: CoordinateMap,
    image_dims_j: Tuple[int, int]
) -> PairEvaluation:
    """Map i-landmarks into frame j and compare with the j-landmarks of the same ids"""
    j_ids = set(landmarks_j.ids)
    shared = [lid for lid in landmarks_i.ids if lid in j_ids]
    if not shared:
        raise EvaluationError(f"No shared landmarks between {landmarks_i.image_id} and {landmarks_j.image_id}")

    initial = landmarks_i.select(shared)
    truth = landmarks_j.select(shared)
    estimated = map_points(coordinate_map, initial)

    diagonal = _diagonal(image_dims_j)
    distances = np.hypot(estimated[:, 0] - truth[:, 0], estimated[:, 1] - truth[:, 1])
    initial_distances = np.hypot(initial[:, 0] - truth[:, 0], initial[:, 1] - truth[:, 1])
    errors = distances / diagonal
    initial_errors = initial_distances / diagonal

    improved = int(np.sum(errors < initial_errors))
    return PairEvaluation(
        pair=(landmarks_i.image_id, landmarks_j.image_id),
        rtre_per_landmark={lid: float(e) for lid, e in zip(shared, errors)},
        rire_per_landmark={lid: float(e) for lid, e in zip(shared, initial_errors)},
        distance_per_landmark={lid: float(d) for lid, d in zip(shared, distances)},
        median_rtre=float(np.median(errors)),
        mean_rtre=_mean(errors),
        max_rtre=float(np.max(errors)),
        robustness=improved / len(shared),
        mean_distance=_mean(distances)
    )


@dataclass
class MetricsReport:
    """Aggregates over pairs; distances in pixels with a micrometer companion"""
    amrtre: float
    mmrtre: float
    amean_rtre: float
    amxrtre: float
    r_avg: float
    amean_d: float
    pixel_size_um: float = DEFAULT_PIXEL_SIZE_UM
    pairs: List[PairEvaluation] = field(default_factory=list)

    @property
    def amean_d_um(self) -> float:
        return self.amean_d * self.pixel_size_um

    def to_dict(self) -> Dict[str, Any]:
        return {
            "aggregates": {
                "AMrTRE": self.amrtre,
                "MMrTRE": self.mmrtre,
                "AMean_rTRE": self.amean_rtre,
                "AMxrTRE": self.amxrtre,
                "R_avg": self.r_avg,
                "AMean_D_px": self.amean_d,
                "AMean_D_um": self.amean_d_um
            },
            "notes": {
                "AMean_rTRE": "definition inferred: mean over pairs of the per-pair mean rTRE"
            },
            "pixel_size_um": self.pixel_size_um,
            "pairs": [p.summary(self.pixel_size_um) for p in self.pairs]
        }


def aggregate(pairs: List[PairEvaluation], pixel_size_um: float = DEFAULT_PIXEL_SIZE_UM) -> MetricsReport:
    """Means and medians of per-pair statistics"""
    if not pairs:
        raise EvaluationError("No pair evaluations to aggregate")
    medians = [p.median_rtre for p in pairs]
    report = MetricsReport(
        amrtre=_mean(medians),
        mmrtre=float(np.median(medians)),
        amean_rtre=_mean(p.mean_rtre for p in pairs),
        amxrtre=_mean(p.max_rtre for p in pairs),
        r_avg=_mean(p.robustness for p in pairs),
        amean_d=_mean(p.mean_distance for p in pairs),
        pixel_size_um=pixel_size_um,
        pairs=list(pairs)
    )
    logger.info(f"Aggregated {len(pairs)} pairs: AMrTRE {report.amrtre:.6f}, R_avg {report.r_avg:.4f}")
    return report
