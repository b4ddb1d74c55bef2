"""
Stratalign Stages Package

The per-pair registration stages run by the orchestrator.
"""

from .affine import AffineStage
from .base import BaseStage
from .bspline import BSplineStage
from .rotation_sweep import RotationSweepStage

# Stage ids in graph order
PAIR_STAGES = {
    "rotation_sweep": RotationSweepStage,
    "affine": AffineStage,
    "bspline": BSplineStage
}

__all__ = [
    "BaseStage",
    "RotationSweepStage",
    "AffineStage",
    "BSplineStage",
    "PAIR_STAGES"
]
