"""
Configuration management for Stratalign

Settings come from built-in defaults, then a flat key=value config file, then
CLI overrides. Environment variables are not consulted.
"""

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, Union

from dotenv import dotenv_values
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..affine.estimation import RansacConfig
from ..bspline.loss import OptimizerConfig
from ..core.errors import ConfigError
from ..matching.keypoints import DetectorConfig
from ..matching.sweep import DEFAULT_ANGLES
from ..synth.generator import SynthConfig
from .registration import RegistrationConfig

logger = logging.getLogger(__name__)


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return tuple(float(part) for part in value.split(",") if part.strip())
    return value


class _GroupSettings(BaseSettings):
    """Settings group whose only source is init arguments"""

    model_config = SettingsConfigDict(extra="forbid")

    @classmethod
    def settings_customise_sources(
        cls, settings_cls, init_settings, env_settings, dotenv_settings, file_secret_settings
    ):
        return (init_settings,)


class ImagingSettings(_GroupSettings):
    """Image loading and resampling settings"""
    channel_policy: Literal["luminance", "first"] = "luminance"
    downsample: int = Field(default=1, ge=1)
    fill_value: float = Field(default=0.0, ge=0.0, le=1.0)


class DetectorSettings(_GroupSettings):
    """Built-in keypoint detector settings"""
    max_keypoints: int = Field(default=4096, ge=4)
    pyramid_levels: int = Field(default=3, ge=1)
    nms_radius: int = Field(default=4, ge=1)
    patch_size: int = Field(default=16, ge=2)
    harris_k: float = 0.05
    harris_sigma: float = Field(default=1.0, gt=0.0)
    min_response: float = 1e-10


class MatchingSettings(_GroupSettings):
    """Descriptor matching and rotation sweep settings"""
    ratio: float = Field(default=0.9, gt=0.0, le=1.0)
    rotation_angles: Tuple[float, ...] = DEFAULT_ANGLES
    matches_dir: Optional[str] = None

    @field_validator("rotation_angles", mode="before")
    @classmethod
    def parse_angles(cls, v):
        """Parse comma-separated angles"""
        return _split_list(v)

    @field_validator("matches_dir", mode="before")
    @classmethod
    def empty_dir_is_none(cls, v):
        return None if v == "" else v


class RansacSettings(_GroupSettings):
    """RANSAC affine estimation settings"""
    max_iterations: int = Field(default=2000, ge=1)
    inlier_threshold: float = Field(default=3.0, gt=0.0)
    min_inliers: int = Field(default=8, ge=3)
    seed: int = 0


class BSplineSettings(_GroupSettings):
    """Non-rigid refinement settings"""
    enabled: bool = True
    grid_spacing: float = Field(default=32.0, gt=0.0)
    reg_weight: float = Field(default=1.5e-5, ge=0.0)
    alpha: float = Field(default=0.5, gt=0.0)
    max_iterations: int = Field(default=300, ge=1)
    epsilon: float = Field(default=1e-6, ge=0.0)
    ncc_window_radius: int = Field(default=7, ge=2)
    sample_stride: int = Field(default=2, ge=1)
    normalize_gradient: bool = True
    backtracking: bool = True
    max_halvings: int = Field(default=5, ge=0)


class PipelineSettings(_GroupSettings):
    """Sequence registration and export settings"""
    reference: Literal["first", "middle"] = "first"
    spacing: Tuple[float, float, float] = (1.0, 1.0, 8.0)
    spacing_unit: str = "mm"
    pixel_size_um: float = Field(default=0.25, gt=0.0)
    workers: int = Field(default=4, ge=1)
    save_images: bool = True
    raw_volume: bool = True
    legacy_two_pass: bool = False

    @field_validator("spacing", mode="before")
    @classmethod
    def parse_spacing(cls, v):
        """Parse comma-separated spacing"""
        return _split_list(v)

    @field_validator("spacing")
    @classmethod
    def positive_spacing(cls, v):
        if min(v) <= 0:
            raise ValueError("spacing must be positive")
        return v


class SynthSettings(_GroupSettings):
    """Synthetic sequence generator settings"""
    seed: int = 0
    num_slices: int = 10
    width: int = 256
    height: int = 256
    texture_scale: float = 6.0
    max_rotation_deg: float = 5.0
    max_translation: float = 8.0
    max_log_scale: float = 0.02
    deform_amplitude: float = 6.0
    deform_spacing: float = 64.0
    noise_sigma: float = 0.01
    landmark_grid: int = 8
    structural_drift: float = 0.1
    tissue_mask: bool = False


class LoggingSettings(_GroupSettings):
    """Logging configuration settings"""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file_path: Optional[str] = None
    max_file_size: int = 10485760  # 10MB
    backup_count: int = 5


class APISettings(_GroupSettings):
    """API configuration settings"""
    host: str = "0.0.0.0"
    port: int = 8000
    debug: bool = False
    title: str = "Stratalign"
    version: str = "1.0.0"
    description: str = "Serial-section registration and 3D stacking"


GROUPS: Dict[str, Type[_GroupSettings]] = {
    "imaging": ImagingSettings,
    "detector": DetectorSettings,
    "matching": MatchingSettings,
    "ransac": RansacSettings,
    "bspline": BSplineSettings,
    "pipeline": PipelineSettings,
    "synth": SynthSettings,
    "logging": LoggingSettings,
    "api": APISettings
}

# Left out of run manifests so they stay identical across machines and worker counts
RUNTIME_GROUPS = ("logging", "api")
RUNTIME_KEYS = ("pipeline_workers",)


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def split_key(key: str) -> Tuple[str, str]:
    """'ransac_seed' -> ('ransac', 'seed'); unknown keys raise ConfigError"""
    normalized = normalize_key(key)
    for group, cls in GROUPS.items():
        prefix = f"{group}_"
        if normalized.startswith(prefix) and normalized[len(prefix):] in cls.model_fields:
            return group, normalized[len(prefix):]
    raise ConfigError(f"Unknown configuration key: {key}")


def available_keys() -> List[Tuple[str, Any]]:
    """Every configuration key with its default value"""
    keys = []
    for group, cls in GROUPS.items():
        for name, info in cls.model_fields.items():
            keys.append((f"{group}_{name}", info.get_default(call_default_factory=True)))
    return keys


def load_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Read a flat key=value config file"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    values = dotenv_values(path)
    for key, value in values.items():
        if value is None:
            raise ConfigError(f"Config key without a value: {key}")
        split_key(key)
    return dict(values)


class Settings:
    """Main settings class that combines all configuration"""

    def __init__(self, values: Optional[Dict[str, Any]] = None):
        grouped: Dict[str, Dict[str, Any]] = {group: {} for group in GROUPS}
        for key, value in (values or {}).items():
            group, name = split_key(key)
            grouped[group][name] = value

        try:
            self.imaging = ImagingSettings(**grouped["imaging"])
            self.detector = DetectorSettings(**grouped["detector"])
            self.matching = MatchingSettings(**grouped["matching"])
            self.ransac = RansacSettings(**grouped["ransac"])
            self.bspline = BSplineSettings(**grouped["bspline"])
            self.pipeline = PipelineSettings(**grouped["pipeline"])
            self.synth = SynthSettings(**grouped["synth"])
            self.logging = LoggingSettings(**grouped["logging"])
            self.api = APISettings(**grouped["api"])
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e

    @classmethod
    def from_file(cls, path: Optional[Union[str, Path]] = None,
                  overrides: Optional[Dict[str, Any]] = None) -> "Settings":
        """Defaults, then the config file, then overrides"""
        values: Dict[str, Any] = load_config_file(path) if path else {}
        values.update({normalize_key(k): v for k, v in (overrides or {}).items()})
        return cls(values)

    def with_overrides(self, overrides: Dict[str, Any]) -> "Settings":
        values = self.to_dict()
        values.update({normalize_key(k): v for k, v in overrides.items()})
        return Settings(values)

    def registration_config(self) -> RegistrationConfig:
        """Per-pair algorithm configuration"""
        try:
            return RegistrationConfig(
                detector=DetectorConfig(**self.detector.model_dump()),
                ratio=self.matching.ratio,
                angles=tuple(self.matching.rotation_angles),
                ransac=RansacConfig(**self.ransac.model_dump()),
                optimizer=OptimizerConfig(**self.bspline.model_dump(exclude={"enabled"})),
                bspline_enabled=self.bspline.enabled,
                fill_value=self.imaging.fill_value,
                matches_dir=self.matching.matches_dir
            )
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def synth_config(self) -> SynthConfig:
        values = self.synth.model_dump(exclude={"width", "height"})
        return SynthConfig(dims=(self.synth.width, self.synth.height), **values)

    def validate(self) -> bool:
        """Validate all settings"""
        try:
            self.registration_config()
            self.synth_config().validate()
            if 0.0 not in self.matching.rotation_angles:
                raise ConfigError("matching_rotation_angles must include 0")

            if self.matching.ratio == 1.0:
                logger.warning("matching_ratio=1 disables the ratio test")
            if not self.bspline.enabled:
                logger.warning("B-spline refinement disabled; pairs will be affine-only")

            return True
        except Exception as e:
            logger.error(f"Settings validation failed: {e}")
            return False

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to a flat key -> value dictionary"""
        flat: Dict[str, Any] = {}
        for group in GROUPS:
            for name, value in getattr(self, group).model_dump().items():
                flat[f"{group}_{name}"] = list(value) if isinstance(value, tuple) else value
        return flat

    def manifest_dict(self) -> Dict[str, Any]:
        """Effective configuration recorded in run manifests"""
        return {
            key: value for key, value in self.to_dict().items()
            if key.split("_", 1)[0] not in RUNTIME_GROUPS and key not in RUNTIME_KEYS
        }


def configure_logging(logging_settings: Optional[LoggingSettings] = None):
    """Configure root logging from settings"""
    logging_settings = logging_settings or LoggingSettings()
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if logging_settings.file_path:
        handlers.append(RotatingFileHandler(
            logging_settings.file_path,
            maxBytes=logging_settings.max_file_size,
            backupCount=logging_settings.backup_count
        ))
    logging.basicConfig(
        level=getattr(logging, logging_settings.level.upper(), logging.INFO),
        format=logging_settings.format,
        handlers=handlers,
        force=True
    )


# Global settings instance
settings = Settings()
