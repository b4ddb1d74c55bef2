"""
Stratalign Synth Package

Deterministic synthetic sequences with known ground truth, and sectioning artifacts.
"""

from .degrade import degrade
from .generator import GroundTruth, SynthConfig, generate_sequence, slice_id
from .io import SYNTH_MANIFEST, write_sequence

__all__ = [
    "GroundTruth",
    "SynthConfig",
    "generate_sequence",
    "slice_id",
    "degrade",
    "SYNTH_MANIFEST",
    "write_sequence"
]
