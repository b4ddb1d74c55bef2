"""
Synthetic serial-section sequences with exact ground truth
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

from ..affine.transform import AffineTransform2D, compose, invert
from ..bspline.field import BSplineField
from ..core.errors import SynthConfigError
from ..imaging import CoordinateMap, IdentityMap, MapChain, ScalarImage, sample_bilinear
from ..metrics.landmarks import LandmarkSet

logger = logging.getLogger(__name__)

INVERSE_ITERATIONS = 30
INTENSITY_RANGE = (0.05, 0.95)

# independent random streams per purpose
TEXTURE_STREAM = 1
JITTER_STREAM = 2
DEFORM_STREAM = 3
NOISE_STREAM = 4


@dataclass
class SynthConfig:
    """Generator parameters; identical configs give bit-identical output"""
    seed: int = 0
    num_slices: int = 10
    dims: Tuple[int, int] = (256, 256)
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

    def validate(self):
        if self.num_slices < 2:
            raise SynthConfigError("num_slices must be >= 2")
        if min(self.dims) < 32:
            raise SynthConfigError(f"dims must be at least 32x32, got {self.dims}")
        if self.deform_amplitude < 0 or self.deform_spacing <= 0:
            raise SynthConfigError("deform_amplitude must be >= 0 and deform_spacing > 0")
        if self.deform_amplitude > self.deform_spacing / 2:
            raise SynthConfigError(
                f"deform_amplitude {self.deform_amplitude:g} exceeds half the spacing {self.deform_spacing:g}"
            )
        if self.texture_scale <= 0:
            raise SynthConfigError("texture_scale must be > 0")
        if min(self.max_rotation_deg, self.max_translation, self.max_log_scale, self.noise_sigma) < 0:
            raise SynthConfigError("Jitter bounds and noise_sigma must be >= 0")
        if self.landmark_grid < 1:
            raise SynthConfigError("landmark_grid must be >= 1")
        if not 0.0 <= self.structural_drift <= 1.0:
            raise SynthConfigError("structural_drift must lie in [0, 1]")

    @property
    def affine_jitter(self) -> Tuple[float, float, float]:
        """(max |rotation| deg, max translation px, max |log-scale|)"""
        return self.max_rotation_deg, self.max_translation, self.max_log_scale

    @property
    def jitter_magnitude(self) -> float:
        """Typical landmark displacement implied by the configured bounds, in px"""
        w, h = self.dims
        radius = 0.25 * math.hypot(w, h)
        return (
            self.max_translation
            + math.radians(self.max_rotation_deg) * radius
            + self.max_log_scale * radius
            + self.deform_amplitude
        )

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["dims"] = list(self.dims)
        return record


@dataclass
class GroundTruth:
    """Reference-frame -> slice maps and the landmarks they carry"""
    maps: List[CoordinateMap]
    landmarks: List[LandmarkSet]
    affines: List[AffineTransform2D] = field(default_factory=list)
    fields: List[BSplineField] = field(default_factory=list)

    def inverse_points(self, index: int, points: np.ndarray) -> np.ndarray:
        """Slice -> reference coordinates by fixed-point iteration"""
        return _invert_truth(self.affines[index], self.fields[index], np.asarray(points, dtype=np.float64))


def slice_id(index: int) -> str:
    return f"slice_{index:03d}"


def _rng(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, stream, index])


def _texture(rng: np.random.Generator, shape: Tuple[int, int], scale: float) -> np.ndarray:
    smooth = gaussian_filter(rng.standard_normal(shape), sigma=scale, mode="reflect")
    smooth -= smooth.min()
    peak = smooth.max()
    if peak > 0:
        smooth /= peak
    low, high = INTENSITY_RANGE
    return low + (high - low) * smooth


def _margin(cfg: SynthConfig) -> int:
    w, h = cfg.dims
    half_diagonal = 0.5 * math.hypot(w, h)
    reach = (
        cfg.max_translation
        + cfg.deform_amplitude
        + math.sin(math.radians(min(cfg.max_rotation_deg, 90.0))) * half_diagonal
        + (math.exp(cfg.max_log_scale) - 1.0) * half_diagonal
    )
    return int(math.ceil(reach)) + 4


def _jitter_affine(rng: np.random.Generator, cfg: SynthConfig) -> AffineTransform2D:
    w, h = cfg.dims
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    max_rotation, max_translation, max_log_scale = cfg.affine_jitter
    angle = rng.uniform(-max_rotation, max_rotation)
    tx, ty = rng.uniform(-max_translation, max_translation, size=2)
    scale = math.exp(rng.uniform(-max_log_scale, max_log_scale))
    linear = compose(AffineTransform2D.scaling(scale), AffineTransform2D.rotation(angle))
    centered = compose(linear, AffineTransform2D.translation(-cx, -cy))
    return compose(AffineTransform2D.translation(cx + tx, cy + ty), centered)


def _deformation(rng: np.random.Generator, cfg: SynthConfig) -> BSplineField:
    template = BSplineField.zeros(cfg.dims, cfg.deform_spacing)
    coeffs = rng.uniform(-1.0, 1.0, size=template.coeffs.shape)
    norms = np.linalg.norm(coeffs, axis=2, keepdims=True)
    coeffs = np.where(norms > 1.0, coeffs / np.maximum(norms, 1e-12), coeffs) * cfg.deform_amplitude
    return template.with_coeffs(coeffs)


def _invert_truth(affine: AffineTransform2D, bspline_field: BSplineField, points: np.ndarray) -> np.ndarray:
    # solve A(p + u(p)) = q, i.e. p = A^-1 q - u(p)
    target_x, target_y = invert(affine).apply(points[..., 0], points[..., 1])
    px, py = np.array(target_x), np.array(target_y)
    for _ in range(INVERSE_ITERATIONS):
        dx, dy = bspline_field.displacement(px, py)
        px, py = target_x - dx, target_y - dy
    return np.stack([px, py], axis=-1)


def _landmark_grid(cfg: SynthConfig) -> Tuple[List[str], np.ndarray]:
    w, h = cfg.dims
    g = cfg.landmark_grid
    xs = [(k + 1) * (w - 1) / (g + 1) for k in range(g)]
    ys = [(k + 1) * (h - 1) / (g + 1) for k in range(g)]
    ids, points = [], []
    for r, y in enumerate(ys):
        for c, x in enumerate(xs):
            ids.append(f"L{r:02d}_{c:02d}")
            points.append((x, y))
    return ids, np.array(points, dtype=np.float64)


def _tissue_mask(cfg: SynthConfig, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    w, h = cfg.dims
    r = np.hypot((xs - (w - 1) / 2.0) / (0.45 * w), (ys - (h - 1) / 2.0) / (0.45 * h))
    return np.clip(1.5 - r, 0.0, 1.0) ** 0.5


def generate_sequence(cfg: SynthConfig) -> Tuple[List[ScalarImage], GroundTruth]:
    """Slices of one drifting texture, each seen through its own known affine + B-spline map.

    Slice 0 is the reference. The truth map of slice t takes reference
    coordinates p to A_t(p + u_t(p)) in slice t, and slice t is rendered by
    inverting that map numerically at every pixel.
    """
    cfg.validate()
    w, h = cfg.dims
    margin = _margin(cfg)
    padded_shape = (h + 2 * margin, w + 2 * margin)
    texture_a = _texture(_rng(cfg.seed, TEXTURE_STREAM, 0), padded_shape, cfg.texture_scale)
    texture_b = _texture(_rng(cfg.seed, TEXTURE_STREAM, 1), padded_shape, cfg.texture_scale)

    ids, reference_points = _landmark_grid(cfg)
    qy, qx = np.mgrid[0:h, 0:w].astype(np.float64)
    grid = np.stack([qx, qy], axis=-1)

    slices: List[ScalarImage] = []
    maps: List[CoordinateMap] = []
    affines: List[AffineTransform2D] = []
    fields: List[BSplineField] = []
    landmarks: List[LandmarkSet] = []
    for t in range(cfg.num_slices):
        if t == 0:
            affine = AffineTransform2D.identity()
            deformation = BSplineField.zeros(cfg.dims, cfg.deform_spacing)
            truth_map: CoordinateMap = IdentityMap()
        else:
            affine = _jitter_affine(_rng(cfg.seed, JITTER_STREAM, t), cfg)
            deformation = _deformation(_rng(cfg.seed, DEFORM_STREAM, t), cfg)
            truth_map = MapChain([deformation, affine])

        weight = cfg.structural_drift * t / (cfg.num_slices - 1)
        base = ScalarImage((1.0 - weight) * texture_a + weight * texture_b)

        source = _invert_truth(affine, deformation, grid) if t > 0 else grid
        values = sample_bilinear(base, source[..., 0] + margin, source[..., 1] + margin)
        if cfg.tissue_mask:
            values = values * _tissue_mask(cfg, source[..., 0], source[..., 1])
        if cfg.noise_sigma > 0:
            values = values + _rng(cfg.seed, NOISE_STREAM, t).normal(0.0, cfg.noise_sigma, size=values.shape)

        slices.append(ScalarImage.from_array(values))
        maps.append(truth_map)
        affines.append(affine)
        fields.append(deformation)
        landmarks.append(LandmarkSet(slice_id(t), ids, np.column_stack(truth_map(
            reference_points[:, 0], reference_points[:, 1]
        ))))

    logger.info(f"Generated {cfg.num_slices} synthetic slices of {w}x{h} (seed {cfg.seed})")
    return slices, GroundTruth(maps=maps, landmarks=landmarks, affines=affines, fields=fields)
