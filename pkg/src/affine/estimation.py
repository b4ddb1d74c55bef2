"""
Affine estimation from point correspondences: least squares and RANSAC consensus
"""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from ..core.errors import DegenerateConfigurationError, UnregistrableError
from .transform import AffineTransform2D

if TYPE_CHECKING:
    from ..matching.matcher import MatchSet

logger = logging.getLogger(__name__)

MINIMAL_SAMPLE = 3
COLLINEAR_RATIO = 1e-9
SAMPLE_DET_TOLERANCE = 1e-6
SCORING_CHUNK = 256


@dataclass
class RansacConfig:
    """Random sample consensus parameters"""
    max_iterations: int = 2000
    inlier_threshold: float = 3.0
    min_inliers: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.inlier_threshold > 0:
            raise ValueError("inlier_threshold must be > 0")
        if self.min_inliers < MINIMAL_SAMPLE:
            raise ValueError(f"min_inliers must be >= {MINIMAL_SAMPLE}")


@dataclass
class ConsensusResult:
    """Outcome of a consensus search; never raises on weak support"""
    transform: Optional[AffineTransform2D]
    inliers: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    mean_residual: float = float("inf")

    @property
    def inlier_count(self) -> int:
        return int(self.inliers.size)


def residuals(transform: AffineTransform2D, moving: np.ndarray, fixed: np.ndarray) -> np.ndarray:
    """Euclidean distances ||T(q_i) - p_i||"""
    mx, my = transform.apply(moving[:, 0], moving[:, 1])
    return np.hypot(mx - fixed[:, 0], my - fixed[:, 1])


def fit_affine(moving: np.ndarray, fixed: np.ndarray) -> AffineTransform2D:
    """Least-squares affine taking `moving` points onto `fixed` points"""
    moving = np.asarray(moving, dtype=np.float64).reshape(-1, 2)
    fixed = np.asarray(fixed, dtype=np.float64).reshape(-1, 2)
    if len(moving) < MINIMAL_SAMPLE:
        raise DegenerateConfigurationError(
            f"Need at least {MINIMAL_SAMPLE} correspondences, got {len(moving)}"
        )

    q_mean = moving.mean(axis=0)
    p_mean = fixed.mean(axis=0)
    q = moving - q_mean
    p = fixed - p_mean

    singular = np.linalg.svd(q, compute_uv=False)
    if singular[0] == 0.0 or singular[-1] <= COLLINEAR_RATIO * singular[0]:
        raise DegenerateConfigurationError("Moving points are collinear or coincident")

    # q @ X = p, so the linear part is X transposed
    solution, _, _, _ = np.linalg.lstsq(q, p, rcond=None)
    linear = solution.T
    translation = p_mean - linear @ q_mean
    return AffineTransform2D(
        a11=linear[0, 0], a12=linear[0, 1],
        a21=linear[1, 0], a22=linear[1, 1],
        tx=translation[0], ty=translation[1]
    )


def estimate_least_squares(matches: "MatchSet") -> AffineTransform2D:
    """Affine in the moving -> fixed direction minimizing squared residuals over all pairs"""
    return fit_affine(matches.moving_points, matches.fixed_points)


def _canonical_order(fixed: np.ndarray, moving: np.ndarray) -> np.ndarray:
    # lexsort keys: last one is primary
    return np.lexsort((moving[:, 1], moving[:, 0], fixed[:, 1], fixed[:, 0]))


def _draw_samples(rng: np.random.Generator, n: int, iterations: int) -> np.ndarray:
    samples = rng.integers(0, n, size=(iterations, MINIMAL_SAMPLE))
    while True:
        repeated = (
            (samples[:, 0] == samples[:, 1])
            | (samples[:, 0] == samples[:, 2])
            | (samples[:, 1] == samples[:, 2])
        )
        count = int(repeated.sum())
        if count == 0:
            return samples
        samples[repeated] = rng.integers(0, n, size=(count, MINIMAL_SAMPLE))


def _minimal_models(
    moving: np.ndarray, fixed: np.ndarray, samples: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact 3-point affines for every sample; returns (models (k, 3, 2), sample indices kept)"""
    homogeneous = np.concatenate([moving[samples], np.ones(samples.shape + (1,))], axis=2)
    targets = fixed[samples]
    det = np.linalg.det(homogeneous)
    usable = np.abs(det) > SAMPLE_DET_TOLERANCE
    if not np.any(usable):
        return np.zeros((0, 3, 2)), np.zeros(0, dtype=np.intp)
    models = np.linalg.solve(homogeneous[usable], targets[usable])
    return models, np.flatnonzero(usable)


def _model_to_affine(model: np.ndarray) -> AffineTransform2D:
    return AffineTransform2D(
        a11=model[0, 0], a12=model[1, 0], tx=model[2, 0],
        a21=model[0, 1], a22=model[1, 1], ty=model[2, 1]
    )


def ransac_consensus(
    fixed_points: np.ndarray, moving_points: np.ndarray, config: RansacConfig
) -> ConsensusResult:
    """Seeded RANSAC over correspondences, returning the refit model and its inliers.

    Matches are put into a canonical order before sampling, so the result
    does not depend on the order of the input. Inlier indices refer to the
    input order.
    """
    fixed = np.asarray(fixed_points, dtype=np.float64).reshape(-1, 2)
    moving = np.asarray(moving_points, dtype=np.float64).reshape(-1, 2)
    n = len(fixed)
    if n < MINIMAL_SAMPLE:
        return ConsensusResult(transform=None)

    order = _canonical_order(fixed, moving)
    fixed = fixed[order]
    moving = moving[order]

    rng = np.random.default_rng(config.seed)
    samples = _draw_samples(rng, n, config.max_iterations)
    models, kept = _minimal_models(moving, fixed, samples)
    if len(models) == 0:
        return ConsensusResult(transform=None)

    moving_h = np.column_stack([moving, np.ones(n)])
    counts = np.empty(len(models), dtype=np.int64)
    mean_residuals = np.empty(len(models))
    for start in range(0, len(models), SCORING_CHUNK):
        chunk = models[start:start + SCORING_CHUNK]
        predicted = np.einsum("nk,mkd->mnd", moving_h, chunk)
        errors = np.linalg.norm(predicted - fixed[None, :, :], axis=2)
        inside = errors <= config.inlier_threshold
        chunk_counts = inside.sum(axis=1)
        counts[start:start + len(chunk)] = chunk_counts
        mean_residuals[start:start + len(chunk)] = (
            np.where(inside, errors, 0.0).sum(axis=1) / np.maximum(chunk_counts, 1)
        )

    # most inliers, then lower mean residual, then earliest iteration
    best = int(np.lexsort((kept, mean_residuals, -counts))[0])
    best_model = _model_to_affine(models[best])
    inlier_mask = residuals(best_model, moving, fixed) <= config.inlier_threshold
    inlier_canonical = np.flatnonzero(inlier_mask)

    transform = best_model
    if inlier_canonical.size >= MINIMAL_SAMPLE:
        try:
            transform = fit_affine(moving[inlier_canonical], fixed[inlier_canonical])
        except DegenerateConfigurationError:
            logger.debug("Inlier set is degenerate, keeping the minimal model")

    inliers = np.sort(order[inlier_canonical])
    fit = residuals(transform, moving[inlier_canonical], fixed[inlier_canonical])
    mean_residual = float(fit.mean()) if fit.size else float("inf")
    logger.debug(f"RANSAC: {inliers.size}/{n} inliers, mean residual {mean_residual:.4f} px")
    return ConsensusResult(transform=transform, inliers=inliers, mean_residual=mean_residual)


def ransac_affine(matches: "MatchSet", config: RansacConfig) -> Tuple[AffineTransform2D, np.ndarray]:
    """Robust moving -> fixed affine; raises UnregistrableError when support is too weak"""
    if len(matches) < MINIMAL_SAMPLE:
        raise UnregistrableError(
            f"RANSAC needs at least {MINIMAL_SAMPLE} matches, got {len(matches)}"
        )
    result = ransac_consensus(matches.fixed_points, matches.moving_points, config)
    if result.transform is None or result.inlier_count < config.min_inliers:
        raise UnregistrableError(
            f"RANSAC found {result.inlier_count} inliers, need {config.min_inliers}"
        )
    logger.info(f"RANSAC accepted {result.inlier_count}/{len(matches)} matches")
    return result.transform, result.inliers
