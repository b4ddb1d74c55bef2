"""
Stratalign Affine Package

Affine transform algebra, least-squares estimation and RANSAC outlier rejection.
"""

from .estimation import (
    ConsensusResult,
    RansacConfig,
    estimate_least_squares,
    fit_affine,
    ransac_affine,
    ransac_consensus,
    residuals
)
from .io import load_transform, save_transform, transform_record
from .transform import AffineTransform2D, apply, compose, invert

__all__ = [
    # Algebra
    "AffineTransform2D",
    "apply",
    "compose",
    "invert",

    # Estimation
    "ConsensusResult",
    "RansacConfig",
    "estimate_least_squares",
    "fit_affine",
    "ransac_affine",
    "ransac_consensus",
    "residuals",

    # Files
    "load_transform",
    "save_transform",
    "transform_record"
]
