"""
Match sets and mutual-nearest-neighbour descriptor matching
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .keypoints import Keypoint, descriptor_matrix, keypoint_coordinates

logger = logging.getLogger(__name__)

Dims = Tuple[int, int]


def _as_points(points) -> np.ndarray:
    return np.asarray(points, dtype=np.float64).reshape(-1, 2)


def within_bounds(points: np.ndarray, dims: Dims) -> np.ndarray:
    """Mask of points with 0 <= x < width and 0 <= y < height"""
    w, h = dims
    return (
        (points[:, 0] >= 0.0) & (points[:, 0] < w)
        & (points[:, 1] >= 0.0) & (points[:, 1] < h)
    )


@dataclass(frozen=True, eq=False)
class MatchSet:
    """Correspondences (fixed_point, moving_point, score) between two images.

    Dims are (width, height). Points always lie within their image and no
    (fixed_point, moving_point) pair appears twice.
    """
    fixed_points: np.ndarray = field(repr=False)
    moving_points: np.ndarray = field(repr=False)
    scores: np.ndarray = field(repr=False)
    fixed_dims: Dims
    moving_dims: Dims

    @classmethod
    def build(
        cls,
        fixed_points,
        moving_points,
        scores,
        fixed_dims: Dims,
        moving_dims: Dims,
        drop_out_of_bounds: bool = False
    ) -> "MatchSet":
        """Validate, optionally clip to bounds, and deduplicate (first occurrence kept)"""
        fixed = _as_points(fixed_points)
        moving = _as_points(moving_points)
        score = np.asarray(scores, dtype=np.float64).reshape(-1)
        if not (len(fixed) == len(moving) == len(score)):
            raise ValueError("Match arrays must have equal length")

        inside = within_bounds(fixed, fixed_dims) & within_bounds(moving, moving_dims)
        if drop_out_of_bounds:
            fixed, moving, score = fixed[inside], moving[inside], score[inside]
        elif not np.all(inside):
            bad = int(np.flatnonzero(~inside)[0])
            raise ValueError(f"Match {bad} lies outside its image bounds")

        if len(fixed):
            _, first = np.unique(np.hstack([fixed, moving]), axis=0, return_index=True)
            keep = np.sort(first)
            fixed, moving, score = fixed[keep], moving[keep], score[keep]

        for array in (fixed, moving, score):
            array.setflags(write=False)
        return cls(
            fixed_points=fixed,
            moving_points=moving,
            scores=score,
            fixed_dims=tuple(int(v) for v in fixed_dims),
            moving_dims=tuple(int(v) for v in moving_dims)
        )

    @classmethod
    def empty(cls, fixed_dims: Dims, moving_dims: Dims) -> "MatchSet":
        return cls.build(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0), fixed_dims, moving_dims)

    def __len__(self) -> int:
        return len(self.scores)

    @property
    def pairs(self) -> List[Tuple[Tuple[float, float], Tuple[float, float], float]]:
        return [
            ((float(f[0]), float(f[1])), (float(m[0]), float(m[1])), float(s))
            for f, m, s in zip(self.fixed_points, self.moving_points, self.scores)
        ]

    def subset(self, indices: Sequence[int]) -> "MatchSet":
        indices = np.asarray(indices, dtype=np.intp)
        return MatchSet.build(
            self.fixed_points[indices], self.moving_points[indices], self.scores[indices],
            self.fixed_dims, self.moving_dims
        )

    def swapped(self) -> "MatchSet":
        """The same correspondences with the roles of fixed and moving exchanged"""
        return MatchSet.build(
            self.moving_points, self.fixed_points, self.scores, self.moving_dims, self.fixed_dims
        )


def _infer_dims(points: np.ndarray) -> Dims:
    if len(points) == 0:
        return (1, 1)
    return int(np.floor(points[:, 0].max())) + 1, int(np.floor(points[:, 1].max())) + 1


def _passes_ratio(similarity: np.ndarray, best: np.ndarray, ratio: float) -> np.ndarray:
    """Lowe test on cosine distance along axis 1: (1 - best) <= ratio * (1 - second)"""
    if similarity.shape[1] < 2:
        return np.ones(similarity.shape[0], dtype=bool)
    second = np.partition(similarity, -2, axis=1)[:, -2]
    best_distance = np.maximum(1.0 - best, 0.0)
    second_distance = np.maximum(1.0 - second, 0.0)
    return best_distance <= ratio * second_distance


def match_descriptors(
    fixed_kps: List[Keypoint],
    moving_kps: List[Keypoint],
    ratio: float = 0.9,
    fixed_dims: Optional[Dims] = None,
    moving_dims: Optional[Dims] = None
) -> MatchSet:
    """Mutual nearest neighbours on descriptor dot products that pass the ratio test.

    The ratio test is applied from both sides, so swapping the inputs yields
    the same correspondences with their roles exchanged.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")

    fixed_xy = keypoint_coordinates(fixed_kps)
    moving_xy = keypoint_coordinates(moving_kps)
    fixed_dims = fixed_dims or _infer_dims(fixed_xy)
    moving_dims = moving_dims or _infer_dims(moving_xy)
    if not fixed_kps or not moving_kps:
        return MatchSet.empty(fixed_dims, moving_dims)

    similarity = descriptor_matrix(fixed_kps) @ descriptor_matrix(moving_kps).T

    forward = np.argmax(similarity, axis=1)
    backward = np.argmax(similarity, axis=0)
    rows = np.arange(len(fixed_kps))
    mutual = backward[forward] == rows

    best = similarity[rows, forward]
    forward_ok = _passes_ratio(similarity, best, ratio)
    backward_ok = _passes_ratio(similarity.T, similarity.T[np.arange(len(moving_kps)), backward], ratio)

    keep = mutual & forward_ok & backward_ok[forward]
    fi = rows[keep]
    mi = forward[keep]
    matches = MatchSet.build(
        fixed_xy[fi], moving_xy[mi], similarity[fi, mi], fixed_dims, moving_dims,
        drop_out_of_bounds=True
    )
    logger.debug(f"Matched {len(matches)} of {len(fixed_kps)}x{len(moving_kps)} keypoints")
    return matches
