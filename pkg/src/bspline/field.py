"""
Cubic B-spline free-form deformation fields
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy import sparse

from ..core.errors import OutOfDomainError

DEGREE = 3
RUNAWAY_FRACTION = 0.25

Pair = Tuple[float, float]


def basis_cubic(u: Union[float, np.ndarray]) -> np.ndarray:
    """Uniform cubic B-spline weights B0..B3 at offset u, stacked on the last axis"""
    u = np.asarray(u, dtype=np.float64)
    u2 = u * u
    u3 = u2 * u
    return np.stack([
        (1.0 - u) ** 3,
        3.0 * u3 - 6.0 * u2 + 4.0,
        -3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0,
        u3
    ], axis=-1) / 6.0


def _cells(coords: np.ndarray, spacing: float, origin: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
    # points outside the support reuse the nearest edge cell (polynomial continuation)
    t = (np.asarray(coords, dtype=np.float64) - origin) / spacing
    k = np.clip(np.floor(t), 1, count - 3).astype(np.intp)
    return k, t - k


def axis_basis(coords: np.ndarray, spacing: float, origin: float, count: int) -> sparse.csr_matrix:
    """Sparse (len(coords), count) matrix of 1D basis weights along one axis"""
    coords = np.asarray(coords, dtype=np.float64).reshape(-1)
    k, u = _cells(coords, spacing, origin, count)
    weights = basis_cubic(u)
    cols = k[:, None] - 1 + np.arange(4)[None, :]
    rows = np.repeat(np.arange(len(coords)), 4)
    return sparse.csr_matrix((weights.ravel(), (rows, cols.ravel())), shape=(len(coords), count))


def grid_size(extent: int, spacing: float) -> int:
    """Control points along an axis: one extra ring beyond each image edge"""
    return int(np.floor((extent - 1) / spacing)) + 4


@dataclass(frozen=True, eq=False)
class BSplineField:
    """Displacement field T(x) = x + sum c_ij B_i(u) B_j(v) on a uniform control grid.

    coeffs has shape (ny, nx, 2) with the last axis holding (dx, dy) in pixels.
    Control point (i, j) sits at origin + (i * spacing_x, j * spacing_y).
    """
    coeffs: np.ndarray = field(repr=False)
    spacing: Pair
    origin: Pair
    image_dims: Tuple[int, int]
    degree: int = DEGREE

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.float64, copy=True)
        if coeffs.ndim != 3 or coeffs.shape[2] != 2:
            raise ValueError(f"Coefficients must have shape (ny, nx, 2), got {coeffs.shape}")
        if coeffs.shape[0] < 4 or coeffs.shape[1] < 4:
            raise ValueError("Cubic support needs at least 4x4 control points")
        if self.degree != DEGREE:
            raise ValueError("Only cubic B-spline fields are supported")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("Coefficients must be finite")
        if min(self.spacing) <= 0:
            raise ValueError("Control spacing must be positive")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "spacing", (float(self.spacing[0]), float(self.spacing[1])))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "image_dims", (int(self.image_dims[0]), int(self.image_dims[1])))

    @classmethod
    def zeros(cls, image_dims: Tuple[int, int], spacing: Union[float, Pair]) -> "BSplineField":
        """Zero field covering a (width, height) image with one extra control ring"""
        sx, sy = (spacing, spacing) if np.isscalar(spacing) else spacing
        w, h = image_dims
        nx, ny = grid_size(w, sx), grid_size(h, sy)
        return cls(coeffs=np.zeros((ny, nx, 2)), spacing=(sx, sy), origin=(-sx, -sy), image_dims=(w, h))

    @property
    def nx(self) -> int:
        return self.coeffs.shape[1]

    @property
    def ny(self) -> int:
        return self.coeffs.shape[0]

    @property
    def spacing_x(self) -> float:
        return self.spacing[0]

    @property
    def spacing_y(self) -> float:
        return self.spacing[1]

    @property
    def max_coefficient_norm(self) -> float:
        return RUNAWAY_FRACTION * min(self.image_dims)

    @property
    def domain(self) -> Tuple[float, float, float, float]:
        """Supported rectangle (x0, y0, x1, y1), half-open on the far side"""
        ox, oy = self.origin
        sx, sy = self.spacing
        return ox + sx, oy + sy, ox + (self.nx - 2) * sx, oy + (self.ny - 2) * sy

    def with_coeffs(self, coeffs: np.ndarray, clamp: bool = True) -> "BSplineField":
        """Same grid with new coefficients, each clipped to the runaway bound"""
        coeffs = np.asarray(coeffs, dtype=np.float64).reshape(self.coeffs.shape)
        if clamp:
            coeffs = clamp_coefficients(coeffs, self.max_coefficient_norm)
        return BSplineField(coeffs=coeffs, spacing=self.spacing, origin=self.origin,
                            image_dims=self.image_dims)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def within_bound(self) -> bool:
        """Whether every control displacement respects the runaway bound"""
        return bool(np.max(np.linalg.norm(self.coeffs, axis=2)) <= self.max_coefficient_norm * (1.0 + 1e-9))

    def contains(self, x: float, y: float) -> bool:
        x0, y0, x1, y1 = self.domain
        return x0 <= x < x1 and y0 <= y < y1

    def displacement(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        """Displacement at arbitrary points (support is continued past its edges)"""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        kx, ux = _cells(x, self.spacing_x, self.origin[0], self.nx)
        ky, uy = _cells(y, self.spacing_y, self.origin[1], self.ny)
        wx = basis_cubic(ux)
        wy = basis_cubic(uy)
        dx = np.zeros(x.shape)
        dy = np.zeros(x.shape)
        for a in range(4):
            for b in range(4):
                weight = wy[..., a] * wx[..., b]
                c = self.coeffs[ky - 1 + a, kx - 1 + b]
                dx += weight * c[..., 0]
                dy += weight * c[..., 1]
        return dx, dy

    def grid_bases(self, shape: Optional[Tuple[int, int]] = None) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
        """(By, Bx) axis bases of the (height, width) pixel lattice"""
        h, w = shape if shape is not None else (self.image_dims[1], self.image_dims[0])
        by = axis_basis(np.arange(h), self.spacing_y, self.origin[1], self.ny)
        bx = axis_basis(np.arange(w), self.spacing_x, self.origin[0], self.nx)
        return by, bx

    def displacement_grid(self, shape: Optional[Tuple[int, int]] = None) -> np.ndarray:
        """Dense (height, width, 2) displacement on the pixel lattice"""
        by, bx = self.grid_bases(shape)
        return np.stack([tensor_apply(by, self.coeffs[:, :, d], bx) for d in range(2)], axis=-1)

    def __call__(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        dx, dy = self.displacement(x, y)
        return np.asarray(x, dtype=np.float64) + dx, np.asarray(y, dtype=np.float64) + dy


def tensor_apply(by: sparse.csr_matrix, coeffs: np.ndarray, bx: sparse.csr_matrix) -> np.ndarray:
    """By @ C @ Bx^T for one displacement component"""
    return np.asarray(by @ np.asarray(bx @ coeffs.T).T)


def tensor_project(by: sparse.csr_matrix, values: np.ndarray, bx: sparse.csr_matrix) -> np.ndarray:
    """By^T @ G @ Bx, the adjoint of `tensor_apply`"""
    return np.asarray(by.T @ np.asarray(bx.T @ values.T).T)


def clamp_coefficients(coeffs: np.ndarray, limit: float) -> np.ndarray:
    """Scale down any control displacement longer than `limit`"""
    norms = np.linalg.norm(coeffs, axis=-1, keepdims=True)
    scale = np.where(norms > limit, limit / np.maximum(norms, 1e-300), 1.0)
    return coeffs * scale


def transform_point(bspline_field: BSplineField, point: Pair) -> Pair:
    """Map one fixed-frame point into the moving frame; strict about the support"""
    x, y = float(point[0]), float(point[1])
    if not bspline_field.contains(x, y):
        raise OutOfDomainError(f"Point ({x:g}, {y:g}) lies outside the field support {bspline_field.domain}")
    mx, my = bspline_field(x, y)
    return float(mx), float(my)
