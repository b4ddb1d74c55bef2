"""
Pluggable matchers: the built-in keypoint matcher and externally produced match files
"""

import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..affine.transform import AffineTransform2D
from ..core.errors import DegenerateContentError
from ..imaging import ScalarImage
from .io import import_matches, match_file_name
from .keypoints import DetectorConfig, Keypoint, detect_keypoints
from .matcher import Dims, MatchSet, match_descriptors


class MatcherConfig(BaseModel):
    """Configuration shared by matchers"""
    ratio: float = Field(default=0.9, gt=0.0, le=1.0)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)

    model_config = ConfigDict(arbitrary_types_allowed=True)


class BaseMatcher(ABC):
    """Produces matches between a fixed image and rotated views of a moving image.

    Every match set a matcher returns is expressed in the unrotated moving frame.
    """

    def __init__(self, name: str, config: Optional[MatcherConfig] = None):
        self.name = name
        self.config = config or MatcherConfig()
        self.logger = logging.getLogger(f"matcher.{name}")
        self.fixed_dims: Optional[Dims] = None

    def prepare(self, fixed: ScalarImage) -> None:
        """Called once per pair before any view is matched"""
        self.fixed_dims = fixed.dims

    @abstractmethod
    def match_view(
        self,
        view: ScalarImage,
        angle: float,
        view_to_moving: AffineTransform2D,
        moving_dims: Dims
    ) -> MatchSet:
        """Match the fixed image against one rotated view of the moving image"""
        pass


class BuiltinMatcher(BaseMatcher):
    """Harris keypoints with patch descriptors, matched by mutual nearest neighbour"""

    def __init__(self, config: Optional[MatcherConfig] = None):
        super().__init__("builtin", config)
        self.fixed_keypoints: List[Keypoint] = []

    def prepare(self, fixed: ScalarImage) -> None:
        super().prepare(fixed)
        try:
            self.fixed_keypoints = detect_keypoints(fixed, self.config.detector)
        except DegenerateContentError as e:
            self.logger.warning(f"Fixed image has no usable keypoints: {e}")
            self.fixed_keypoints = []
        self.logger.debug(f"Fixed image: {len(self.fixed_keypoints)} keypoints")

    def match_view(self, view, angle, view_to_moving, moving_dims) -> MatchSet:
        if not self.fixed_keypoints:
            return MatchSet.empty(self.fixed_dims, moving_dims)
        try:
            view_keypoints = detect_keypoints(view, self.config.detector)
        except DegenerateContentError as e:
            self.logger.debug(f"Angle {angle:g}: {e}")
            return MatchSet.empty(self.fixed_dims, moving_dims)

        on_view = match_descriptors(
            self.fixed_keypoints, view_keypoints, self.config.ratio,
            fixed_dims=self.fixed_dims, moving_dims=view.dims
        )
        mx, my = view_to_moving.apply(on_view.moving_points[:, 0], on_view.moving_points[:, 1])
        return MatchSet.build(
            on_view.fixed_points, np.column_stack([mx, my]), on_view.scores,
            self.fixed_dims, moving_dims, drop_out_of_bounds=True
        )


class ImportedMatcher(BaseMatcher):
    """Reads per-angle match files written by an external matcher"""

    def __init__(self, matches_dir: Union[str, Path], fixed_id: str, moving_id: str,
                 config: Optional[MatcherConfig] = None):
        super().__init__("imported", config)
        self.matches_dir = Path(matches_dir)
        self.fixed_id = fixed_id
        self.moving_id = moving_id

    def match_view(self, view, angle, view_to_moving, moving_dims) -> MatchSet:
        path = self.matches_dir / match_file_name(self.fixed_id, self.moving_id, angle)
        if not path.is_file():
            self.logger.debug(f"No match file for angle {angle:g}: {path.name}")
            return MatchSet.empty(self.fixed_dims, moving_dims)
        return import_matches(path, self.fixed_dims, moving_dims)


class MatcherRegistry:
    """Registry of matcher factories by name"""

    def __init__(self):
        self.factories: Dict[str, Callable[..., BaseMatcher]] = {}
        self.logger = logging.getLogger("matcher_registry")

    def register(self, name: str, factory: Callable[..., BaseMatcher]):
        """Register a matcher factory"""
        self.factories[name] = factory
        self.logger.debug(f"Registered matcher: {name}")

    def create(self, name: str, **kwargs) -> BaseMatcher:
        """Build a fresh matcher; each pair gets its own instance"""
        factory = self.factories.get(name)
        if factory is None:
            raise KeyError(f"Matcher {name} not found")
        return factory(**kwargs)

    def list_matchers(self) -> List[str]:
        """List all registered matcher names"""
        return list(self.factories.keys())


matcher_registry = MatcherRegistry()
matcher_registry.register("builtin", BuiltinMatcher)
matcher_registry.register("imported", ImportedMatcher)
