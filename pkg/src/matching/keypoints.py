"""
Multi-scale Harris keypoints with normalized intensity-patch descriptors
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from skimage.feature import corner_harris, peak_local_max

from ..core.errors import DegenerateContentError
from ..imaging import ScalarImage, downsample, sample_bilinear

logger = logging.getLogger(__name__)

MIN_IMAGE_SIZE = 32
MIN_KEYPOINTS = 4
DESCRIPTOR_NORM_FLOOR = 1e-8


@dataclass
class DetectorConfig:
    """Corner detector and descriptor settings"""
    max_keypoints: int = 4096
    pyramid_levels: int = 3
    nms_radius: int = 4
    patch_size: int = 16
    harris_k: float = 0.05
    harris_sigma: float = 1.0
    min_response: float = 1e-10

    def __post_init__(self):
        if self.max_keypoints < MIN_KEYPOINTS:
            raise ValueError(f"max_keypoints must be >= {MIN_KEYPOINTS}")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be >= 1")
        if self.patch_size < 2:
            raise ValueError("patch_size must be >= 2")

    @property
    def descriptor_length(self) -> int:
        return self.patch_size * self.patch_size


@dataclass(frozen=True, eq=False)
class Keypoint:
    """Sub-pixel location in full-resolution coordinates with a unit descriptor"""
    x: float
    y: float
    response: float
    descriptor: np.ndarray = field(repr=False)
    level: int = 0


def _pyramid(img: ScalarImage, config: DetectorConfig) -> List[ScalarImage]:
    levels = [img]
    for _ in range(1, config.pyramid_levels):
        smaller = downsample(levels[-1], 2)
        if min(smaller.shape) < 2 * config.patch_size:
            break
        levels.append(smaller)
    return levels


def _patch_offsets(patch_size: int):
    offsets = np.arange(patch_size, dtype=np.float64) - (patch_size - 1) / 2.0
    oy, ox = np.meshgrid(offsets, offsets, indexing="ij")
    return ox.ravel(), oy.ravel()


def _describe_level(level_img: ScalarImage, level: int, config: DetectorConfig) -> List[Keypoint]:
    response = corner_harris(level_img.pixels, method="k", k=config.harris_k, sigma=config.harris_sigma)
    peaks = peak_local_max(
        response,
        min_distance=config.nms_radius,
        threshold_abs=config.min_response,
        exclude_border=config.nms_radius
    )
    if len(peaks) == 0:
        return []

    half = (config.patch_size - 1) / 2.0
    h, w = level_img.shape
    ys = peaks[:, 0].astype(np.float64)
    xs = peaks[:, 1].astype(np.float64)
    fits = (xs - half >= 0) & (xs + half <= w - 1) & (ys - half >= 0) & (ys + half <= h - 1)
    ys, xs = ys[fits], xs[fits]
    strengths = response[peaks[fits, 0], peaks[fits, 1]]
    if len(xs) == 0:
        return []

    ox, oy = _patch_offsets(config.patch_size)
    scale = 2 ** level
    shift = (scale - 1) / 2.0

    patches = sample_bilinear(level_img, xs[:, None] + ox[None, :], ys[:, None] + oy[None, :])
    patches = np.asarray(patches).reshape(len(xs), -1)
    patches = patches - patches.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(patches, axis=1)

    keypoints = []
    for x, y, strength, patch, norm in zip(xs, ys, strengths, patches, norms):
        # flat patches carry no descriptor
        if norm < DESCRIPTOR_NORM_FLOOR:
            continue
        keypoints.append(Keypoint(
            x=float(x * scale + shift),
            y=float(y * scale + shift),
            response=float(strength),
            descriptor=patch / norm,
            level=level
        ))
    return keypoints


def detect_keypoints(img: ScalarImage, config: DetectorConfig = None) -> List[Keypoint]:
    """Harris corners over a half-resolution pyramid, top-K by response"""
    config = config or DetectorConfig()
    if img.width < MIN_IMAGE_SIZE or img.height < MIN_IMAGE_SIZE:
        raise DegenerateContentError(
            f"Image {img.width}x{img.height} is smaller than {MIN_IMAGE_SIZE}x{MIN_IMAGE_SIZE}"
        )

    keypoints: List[Keypoint] = []
    for level, level_img in enumerate(_pyramid(img, config)):
        keypoints.extend(_describe_level(level_img, level, config))

    keypoints = [kp for kp in keypoints if 0.0 <= kp.x < img.width and 0.0 <= kp.y < img.height]
    if len(keypoints) < MIN_KEYPOINTS:
        raise DegenerateContentError(f"Degenerate content: only {len(keypoints)} keypoints found")

    # strongest first; position breaks ties so the order is reproducible
    order = np.lexsort((
        [kp.level for kp in keypoints],
        [kp.x for kp in keypoints],
        [kp.y for kp in keypoints],
        [-kp.response for kp in keypoints]
    ))
    selected = [keypoints[i] for i in order[:config.max_keypoints]]
    logger.debug(f"Detected {len(selected)} keypoints on {img.width}x{img.height} image")
    return selected


def descriptor_matrix(keypoints: List[Keypoint]) -> np.ndarray:
    """Stack descriptors into an (N, D) array"""
    if not keypoints:
        return np.zeros((0, 0))
    return np.vstack([kp.descriptor for kp in keypoints])


def keypoint_coordinates(keypoints: List[Keypoint]) -> np.ndarray:
    """(N, 2) array of keypoint (x, y)"""
    return np.array([[kp.x, kp.y] for kp in keypoints], dtype=np.float64).reshape(-1, 2)
