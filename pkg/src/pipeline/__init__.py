"""
Stratalign Pipeline Package

Pair and sequence registration, composition into the reference frame, volume export,
evaluation runs and charts.
"""

from .evaluate import evaluate_run, load_landmark_dir
from .export import (
    MANIFEST,
    RAW_HEADER,
    RAW_VOLUME,
    TIMINGS,
    build_manifest,
    compare_export_modes,
    export_volume,
    load_run,
    warp_to_reference,
    write_pair_files,
    write_pair_results
)
from .register import build_orchestrator, register_pair
from .sequence import (
    chain_pairs,
    compose_to_reference,
    load_sequence,
    reference_index,
    register_sequence
)

__all__ = [
    # Registration
    "build_orchestrator",
    "register_pair",
    "register_sequence",
    "reference_index",
    "chain_pairs",
    "compose_to_reference",
    "load_sequence",

    # Export
    "MANIFEST",
    "RAW_HEADER",
    "RAW_VOLUME",
    "TIMINGS",
    "build_manifest",
    "compare_export_modes",
    "export_volume",
    "load_run",
    "warp_to_reference",
    "write_pair_files",
    "write_pair_results",

    # Evaluation
    "evaluate_run",
    "load_landmark_dir"
]
