"""
Scalar image representation and raster file I/O
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import tifffile
from skimage import io as skio

from ..core.errors import ImageIOError

logger = logging.getLogger(__name__)

LUMINANCE_WEIGHTS = np.array([0.299, 0.587, 0.114])

TIFF_SUFFIXES = {".tif", ".tiff"}


class ChannelPolicy(str, Enum):
    """How multi-channel rasters are reduced to one channel"""
    LUMINANCE = "luminance"
    FIRST = "first"


@dataclass(frozen=True, eq=False)
class ScalarImage:
    """Immutable 2D grid of intensities in [0, 1], indexed pixels[y, x]"""
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=np.float64, copy=True)
        if pixels.ndim != 2:
            raise ValueError(f"ScalarImage needs a 2D array, got shape {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError("ScalarImage cannot be empty")
        if not np.all(np.isfinite(pixels)):
            raise ValueError("ScalarImage intensities must be finite")
        if pixels.min() < 0.0 or pixels.max() > 1.0:
            raise ValueError("ScalarImage intensities must lie in [0, 1]")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def from_array(cls, array: np.ndarray, clip: bool = True) -> "ScalarImage":
        """Build an image from arbitrary floats, clipping into [0, 1]"""
        array = np.asarray(array, dtype=np.float64)
        if clip:
            array = np.clip(array, 0.0, 1.0)
        return cls(array)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        """(height, width)"""
        return self.pixels.shape

    @property
    def dims(self) -> Tuple[int, int]:
        """(width, height)"""
        return self.width, self.height

    def value_at(self, x: int, y: int) -> float:
        """Stored intensity of pixel (x, y)"""
        return float(self.pixels.flat[y * self.width + x])

    def to_uint8(self) -> np.ndarray:
        """Quantize to 8 bits, rounding half up"""
        return np.floor(self.pixels * 255.0 + 0.5).astype(np.uint8)


def _normalize(raw: np.ndarray, path: Path) -> np.ndarray:
    if raw.dtype == np.bool_:
        return raw.astype(np.float64)
    if raw.dtype == np.uint8:
        return raw.astype(np.float64) / 255.0
    if raw.dtype == np.uint16:
        return raw.astype(np.float64) / 65535.0
    raise ImageIOError(f"Unsupported bit depth {raw.dtype} in {path}")


def _reduce_channels(values: np.ndarray, policy: ChannelPolicy, path: Path) -> np.ndarray:
    if values.ndim == 2:
        return values
    if values.ndim != 3:
        raise ImageIOError(f"Unsupported raster layout {values.shape} in {path}")
    channels = values.shape[2]
    if channels == 1:
        return values[:, :, 0]
    if policy == ChannelPolicy.FIRST or channels == 2:
        return values[:, :, 0]
    if channels in (3, 4):
        # alpha is ignored
        return values[:, :, :3] @ LUMINANCE_WEIGHTS
    raise ImageIOError(f"Unsupported channel count {channels} in {path}")


def load_image(
    path: Union[str, Path],
    channel_policy: Union[ChannelPolicy, str] = ChannelPolicy.LUMINANCE
) -> ScalarImage:
    """Load a PNG or TIFF raster as a normalized single-channel image"""
    path = Path(path)
    policy = ChannelPolicy(channel_policy)

    if not path.is_file():
        raise ImageIOError(f"Image not found: {path}")

    try:
        if path.suffix.lower() in TIFF_SUFFIXES:
            raw = tifffile.imread(path)
        else:
            raw = skio.imread(path)
    except Exception as e:
        raise ImageIOError(f"Cannot read {path}: {e}") from e

    raw = np.asarray(raw)
    if raw.size == 0 or raw.ndim < 2 or raw.shape[0] == 0 or raw.shape[1] == 0:
        raise ImageIOError(f"Zero-sized image: {path}")

    values = _reduce_channels(_normalize(raw, path), policy, path)
    logger.debug(f"Loaded {path.name} ({values.shape[1]}x{values.shape[0]}, {raw.dtype})")
    return ScalarImage.from_array(values)


def save_image(image: ScalarImage, path: Union[str, Path]) -> Path:
    """Write an image as 8-bit PNG"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        skio.imsave(path, image.to_uint8(), check_contrast=False)
    except Exception as e:
        raise ImageIOError(f"Cannot write {path}: {e}") from e
    return path
