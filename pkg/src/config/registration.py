"""
Algorithm-level configuration handed to registration stages
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

from ..affine.estimation import RansacConfig
from ..bspline.loss import OptimizerConfig
from ..matching.keypoints import DetectorConfig
from ..matching.matchers import MatcherConfig
from ..matching.sweep import DEFAULT_ANGLES


@dataclass
class RegistrationConfig:
    """Per-pair registration parameters"""
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    ratio: float = 0.9
    angles: Tuple[float, ...] = DEFAULT_ANGLES
    ransac: RansacConfig = field(default_factory=RansacConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    bspline_enabled: bool = True
    fill_value: float = 0.0
    matches_dir: Optional[str] = None
    export_matches_dir: Optional[str] = None

    def matcher_config(self) -> MatcherConfig:
        return MatcherConfig(ratio=self.ratio, detector=self.detector)
