"""
Stratalign Matching Package

Keypoint detection, descriptor matching, match-file exchange and the rotation sweep.
"""

from .io import COLUMNS, HEADER, export_matches, import_matches, match_file_name
from .keypoints import DetectorConfig, Keypoint, detect_keypoints
from .matcher import MatchSet, match_descriptors
from .matchers import (
    BaseMatcher,
    BuiltinMatcher,
    ImportedMatcher,
    MatcherConfig,
    MatcherRegistry,
    matcher_registry
)
from .sweep import DEFAULT_ANGLES, RotationSweepResult, parse_angles, rotate_image, rotation_sweep

__all__ = [
    # Keypoints
    "DetectorConfig",
    "Keypoint",
    "detect_keypoints",

    # Matching
    "MatchSet",
    "match_descriptors",

    # Match files
    "COLUMNS",
    "HEADER",
    "export_matches",
    "import_matches",
    "match_file_name",

    # Matchers
    "BaseMatcher",
    "BuiltinMatcher",
    "ImportedMatcher",
    "MatcherConfig",
    "MatcherRegistry",
    "matcher_registry",

    # Rotation sweep
    "DEFAULT_ANGLES",
    "RotationSweepResult",
    "parse_angles",
    "rotate_image",
    "rotation_sweep"
]
