"""
Stratalign Metrics Package

Landmark-based registration errors and their aggregates.
"""

from .evaluation import (
    DEFAULT_PIXEL_SIZE_UM,
    MetricsReport,
    PairEvaluation,
    aggregate,
    evaluate_pair,
    rire,
    rtre
)
from .landmarks import LANDMARK_COLUMNS, LandmarkSet, read_landmarks, write_landmarks
from .report import REPORT_CSV, REPORT_JSON, pair_frame, write_report

__all__ = [
    # Landmarks
    "LANDMARK_COLUMNS",
    "LandmarkSet",
    "read_landmarks",
    "write_landmarks",

    # Errors
    "DEFAULT_PIXEL_SIZE_UM",
    "MetricsReport",
    "PairEvaluation",
    "aggregate",
    "evaluate_pair",
    "rire",
    "rtre",

    # Reports
    "REPORT_CSV",
    "REPORT_JSON",
    "pair_frame",
    "write_report"
]
