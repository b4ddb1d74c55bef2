"""
Rotation sweep: orient the moving image by maximizing geometrically consistent matches
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..affine.estimation import RansacConfig, ransac_consensus
from ..affine.transform import AffineTransform2D
from ..core.errors import UnregistrableError
from ..imaging import ScalarImage, warp
from .matcher import MatchSet
from .matchers import BaseMatcher, BuiltinMatcher

logger = logging.getLogger(__name__)

DEFAULT_ANGLES: Tuple[float, ...] = tuple(float(a) for a in range(-165, 181, 15))
MIN_SWEEP_INLIERS = 4


@dataclass
class RotationSweepResult:
    """Winning angle, inlier count per angle and the winner's matches in the unrotated moving frame"""
    best_angle: float
    per_angle_counts: Dict[float, int]
    best_matches: MatchSet
    per_angle_matches: Dict[float, int] = field(default_factory=dict)

    @property
    def best_count(self) -> int:
        return self.per_angle_counts[self.best_angle]

    @property
    def baseline_match_count(self) -> int:
        """Matches found without rotation"""
        return self.per_angle_matches.get(0.0, 0)

    @property
    def best_match_count(self) -> int:
        return self.per_angle_matches.get(self.best_angle, len(self.best_matches))


def _center(width: int, height: int) -> Tuple[float, float]:
    return (width - 1) / 2.0, (height - 1) / 2.0


def rotated_canvas(width: int, height: int, angle_deg: float) -> Tuple[int, int]:
    """(width, height) of the smallest canvas holding the rotated image"""
    theta = math.radians(angle_deg)
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    # rounding keeps exact quarter turns from growing by a pixel
    w = int(math.ceil(round(width * c + height * s, 6)))
    h = int(math.ceil(round(width * s + height * c, 6)))
    return max(w, 1), max(h, 1)


def rotate_image(img: ScalarImage, angle_deg: float, fill: float = 0.0) -> Tuple[ScalarImage, AffineTransform2D]:
    """Rotate content by `angle_deg` about the image center on an expanded canvas.

    Returns the rotated image and the map from canvas coordinates back to
    source coordinates.
    """
    width, height = rotated_canvas(img.width, img.height, angle_deg)
    to_source = AffineTransform2D.rotation(
        -angle_deg, center=_center(width, height), target_center=_center(img.width, img.height)
    )
    return warp(img, to_source, (height, width), fill=fill), to_source


def _sweep_view(moving: ScalarImage, angle: float) -> Tuple[ScalarImage, AffineTransform2D]:
    # undo a content rotation of `angle`
    if angle == 0.0:
        return moving, AffineTransform2D.identity()
    return rotate_image(moving, -angle)


def _pick_winner(counts: Dict[float, int]) -> float:
    # most inliers, then smaller |angle|, then positive before negative
    return min(counts, key=lambda a: (-counts[a], abs(a), 0 if a > 0 else 1))


def rotation_sweep(
    fixed: ScalarImage,
    moving: ScalarImage,
    angles: Sequence[float] = DEFAULT_ANGLES,
    matcher: Optional[BaseMatcher] = None,
    ransac_config: Optional[RansacConfig] = None
) -> RotationSweepResult:
    """Score each candidate angle by RANSAC inlier count and keep the best.

    Angle a means the moving content is the fixed content rotated by a.
    """
    angles = [float(a) for a in angles]
    if not angles:
        raise ValueError("Rotation sweep needs at least one angle")
    if 0.0 not in angles:
        raise ValueError("Rotation sweep angles must include 0")
    if len(set(angles)) != len(angles):
        raise ValueError("Rotation sweep angles must be distinct")

    matcher = matcher or BuiltinMatcher()
    ransac_config = ransac_config or RansacConfig()
    matcher.prepare(fixed)

    counts: Dict[float, int] = {}
    match_counts: Dict[float, int] = {}
    matches_by_angle: Dict[float, MatchSet] = {}
    for angle in sorted(angles):
        view, view_to_moving = _sweep_view(moving, angle)
        matches = matcher.match_view(view, angle, view_to_moving, moving.dims)
        consensus = ransac_consensus(matches.fixed_points, matches.moving_points, ransac_config)
        counts[angle] = consensus.inlier_count
        match_counts[angle] = len(matches)
        matches_by_angle[angle] = matches
        logger.debug(f"Angle {angle:g}: {len(matches)} matches, {consensus.inlier_count} inliers")

    best_angle = _pick_winner(counts)
    if counts[best_angle] < MIN_SWEEP_INLIERS:
        raise UnregistrableError("Pair unregistrable: no angle yields enough inliers", counts)

    logger.info(
        f"Rotation sweep picked {best_angle:g} deg ({counts[best_angle]} inliers, "
        f"{counts[0.0]} at 0 deg)"
    )
    return RotationSweepResult(
        best_angle=best_angle,
        per_angle_counts=counts,
        best_matches=matches_by_angle[best_angle],
        per_angle_matches=match_counts
    )


def parse_angles(text: str) -> List[float]:
    """Comma-separated degrees, e.g. '0,90,180,270'"""
    return [float(part) for part in text.split(",") if part.strip()]
