"""
Exception hierarchy for Stratalign
"""

from typing import Dict, Optional


class RegistrationError(Exception):
    """Base class for all registration errors"""


class ConfigError(RegistrationError):
    """Invalid or unknown configuration key"""


class ImageIOError(RegistrationError):
    """Image could not be read or written"""


class DegenerateContentError(RegistrationError):
    """Image content carries no usable structure (e.g. too few keypoints)"""


class MatchFileError(RegistrationError):
    """Malformed or out-of-bounds match file"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateConfigurationError(RegistrationError):
    """Point configuration does not determine an affine transform"""


class SingularTransformError(RegistrationError):
    """Transform matrix is (near) singular"""


class UnregistrableError(RegistrationError):
    """A pair of images could not be registered"""

    def __init__(self, message: str, per_angle_counts: Optional[Dict[float, int]] = None):
        self.per_angle_counts = dict(per_angle_counts or {})
        if self.per_angle_counts:
            counts = ", ".join(f"{a:g}:{n}" for a, n in sorted(self.per_angle_counts.items()))
            message = f"{message} (inliers per angle: {counts})"
        super().__init__(message)


class OutOfDomainError(RegistrationError):
    """Point lies outside the support of a deformation field"""


class OptimizationError(RegistrationError):
    """Non-rigid optimization diverged"""

    def __init__(self, message: str, iteration: int):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: {message}")


class SynthConfigError(RegistrationError):
    """Synthetic sequence configuration violates a precondition"""


class UnplacedSliceError(RegistrationError):
    """Slice lies beyond a chain break and has no map to the reference frame"""


class EvaluationError(RegistrationError):
    """Nothing could be evaluated"""
