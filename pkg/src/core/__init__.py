"""
Stratalign Core Package

This package contains the error hierarchy, shared serialization and the domain models.
The orchestrator lives in `src.core.orchestrator` and is imported from there.
"""

from .errors import (
    ConfigError,
    DegenerateConfigurationError,
    DegenerateContentError,
    EvaluationError,
    ImageIOError,
    MatchFileError,
    OptimizationError,
    OutOfDomainError,
    RegistrationError,
    SingularTransformError,
    SynthConfigError,
    UnplacedSliceError,
    UnregistrableError
)
from .models import (
    JobStatus,
    PairRegistration,
    PairState,
    PairStatus,
    SequenceRegistration,
    SliceStatus,
    StageResult,
    StageStatus,
    VolumeStack
)
from .serialization import dumps_precise, read_json, write_json

__all__ = [
    # Errors
    "RegistrationError",
    "ConfigError",
    "ImageIOError",
    "DegenerateContentError",
    "MatchFileError",
    "DegenerateConfigurationError",
    "SingularTransformError",
    "UnregistrableError",
    "OutOfDomainError",
    "OptimizationError",
    "SynthConfigError",
    "UnplacedSliceError",
    "EvaluationError",

    # Models
    "PairStatus",
    "SliceStatus",
    "StageStatus",
    "JobStatus",
    "StageResult",
    "PairRegistration",
    "SequenceRegistration",
    "VolumeStack",
    "PairState",

    # Serialization
    "dumps_precise",
    "read_json",
    "write_json"
]
