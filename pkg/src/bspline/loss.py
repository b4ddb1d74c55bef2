"""
Local NCC similarity, diffusion regularization and their analytic gradients
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.ndimage import uniform_filter

from ..core.errors import DegenerateContentError
from ..imaging import ScalarImage, sample_bilinear_with_gradient
from .field import BSplineField, axis_basis, tensor_apply, tensor_project

DENOMINATOR_FLOOR = 1e-10


@dataclass
class OptimizerConfig:
    """Non-rigid stage parameters; `reg_weight` is the regularization weight lambda"""
    reg_weight: float = 1.5e-5
    alpha: float = 0.5
    max_iterations: int = 300
    epsilon: float = 1e-6
    ncc_window_radius: int = 7
    sample_stride: int = 2
    grid_spacing: float = 32.0
    normalize_gradient: bool = True
    backtracking: bool = True
    max_halvings: int = 5

    def __post_init__(self):
        if self.reg_weight < 0:
            raise ValueError("reg_weight must be >= 0")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.ncc_window_radius < 2:
            raise ValueError("ncc_window_radius must be >= 2")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if not self.grid_spacing > 0:
            raise ValueError("grid_spacing must be > 0")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be >= 0")


@dataclass
class LossBreakdown:
    """total = ncc_term + reg_weight * reg_term"""
    total: float
    ncc_term: float
    reg_term: float
    valid_pixel_count: int
    reg_weight: float = 1.5e-5

    @property
    def ncc_sum(self) -> float:
        """Sum-over-windows form of the similarity term"""
        return self.ncc_term * self.valid_pixel_count


class _NccTerm:
    """Windowed NCC between a fixed image and the moving image sampled at r + u(r)"""

    def __init__(self, fixed: ScalarImage, moving: ScalarImage, radius: int, stride: int):
        if fixed.shape != moving.shape:
            raise ValueError(f"Image shapes differ: {fixed.shape} vs {moving.shape}")
        h, w = fixed.shape
        self.fixed = fixed.pixels
        self.moving = moving
        self.size = 2 * radius + 1
        self.window_pixels = float(self.size * self.size)

        ys = np.arange(radius, h - radius, stride)
        xs = np.arange(radius, w - radius, stride)
        if len(ys) == 0 or len(xs) == 0:
            raise DegenerateContentError(
                f"No {self.size}x{self.size} NCC window fits in a {w}x{h} image"
            )
        self.centers = np.zeros((h, w), dtype=bool)
        self.centers[np.ix_(ys, xs)] = True
        self.count = int(self.centers.sum())

        self.xs, self.ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
        self.mean_f = self._box(self.fixed)
        self.var_f = np.maximum(self._box(self.fixed * self.fixed) - self.mean_f ** 2, 0.0)

    def _box(self, values: np.ndarray) -> np.ndarray:
        return uniform_filter(values, size=self.size, mode="constant", cval=0.0)

    def evaluate(self, displacement: np.ndarray, gradient: bool):
        mx = self.xs + displacement[:, :, 0]
        my = self.ys + displacement[:, :, 1]
        warped, gx, gy = sample_bilinear_with_gradient(self.moving, mx, my)

        n = self.window_pixels
        mean_w = self._box(warped)
        var_w = np.maximum(self._box(warped * warped) - mean_w ** 2, 0.0)
        cross = self._box(self.fixed * warped) - self.mean_f * mean_w

        s1 = n * self.var_f
        s2 = n * var_w
        s_num = n * cross
        valid = self.centers & (s1 >= DENOMINATOR_FLOOR) & (s2 >= DENOMINATOR_FLOOR)
        root = np.sqrt(np.where(valid, s1 * s2, 1.0))
        ncc = np.where(valid, s_num / root, 0.0)

        # degenerate windows score 0 but stay in the count
        loss = -float(ncc[self.centers].sum()) / self.count
        if not gradient:
            return loss, None

        a = np.where(valid, 1.0 / root, 0.0)
        d = np.where(valid, ncc / np.where(valid, s2, 1.0), 0.0)
        b = a * self.mean_f
        e = d * mean_w
        # each pixel collects from every window that contains it
        d_warped = -(n / self.count) * (
            self.fixed * self._box(a) - self._box(b) - warped * self._box(d) + self._box(e)
        )
        return loss, np.stack([d_warped * gx, d_warped * gy], axis=-1)


class _RegTerm:
    """Diffusion penalty on size-scaled forward differences of the displacement"""

    def __init__(self, bspline_field: BSplineField, image_dims: Tuple[int, int], stride: int):
        w, h = image_dims
        sx, sy = bspline_field.spacing
        ox, oy = bspline_field.origin
        nx, ny = bspline_field.nx, bspline_field.ny
        # s_x = N_x, s_y = N_y
        self.scales = np.array([float(w), float(h)])

        # x-differences: p and p + (1, 0) both on the lattice
        xs = np.arange(0, w - 1, stride, dtype=np.float64)
        ys = np.arange(0, h, stride, dtype=np.float64)
        self.x_rows = axis_basis(ys, sy, oy, ny)
        self.x_diff = axis_basis(xs + 1.0, sx, ox, nx) - axis_basis(xs, sx, ox, nx)
        self.x_count = len(xs) * len(ys)

        # y-differences: p and p + (0, 1)
        xs = np.arange(0, w, stride, dtype=np.float64)
        ys = np.arange(0, h - 1, stride, dtype=np.float64)
        self.y_diff = axis_basis(ys + 1.0, sy, oy, ny) - axis_basis(ys, sy, oy, ny)
        self.y_cols = axis_basis(xs, sx, ox, nx)
        self.y_count = len(xs) * len(ys)

    def evaluate(self, coeffs: np.ndarray, gradient: bool):
        value = 0.0
        grad = np.zeros_like(coeffs) if gradient else None
        for component in range(2):
            c = coeffs[:, :, component]
            if self.x_count:
                delta = tensor_apply(self.x_rows, c, self.x_diff)
                weight = self.scales[0] ** 2 / self.x_count
                value += 0.5 * weight * float(np.sum(delta * delta))
                if gradient:
                    grad[:, :, component] += weight * tensor_project(self.x_rows, delta, self.x_diff)
            if self.y_count:
                delta = tensor_apply(self.y_diff, c, self.y_cols)
                weight = self.scales[1] ** 2 / self.y_count
                value += 0.5 * weight * float(np.sum(delta * delta))
                if gradient:
                    grad[:, :, component] += weight * tensor_project(self.y_diff, delta, self.y_cols)
        return value, grad


class RegistrationObjective:
    """Combined loss over the coefficients of one control grid; bases are built once"""

    def __init__(self, fixed: ScalarImage, moving: ScalarImage, template: BSplineField,
                 config: OptimizerConfig):
        self.config = config
        self.template = template
        self.shape = fixed.shape
        self.ncc = _NccTerm(fixed, moving, config.ncc_window_radius, config.sample_stride)
        self.reg = _RegTerm(template, fixed.dims, config.sample_stride)
        self.by, self.bx = template.grid_bases(fixed.shape)

    def displacement(self, coeffs: np.ndarray) -> np.ndarray:
        return np.stack([tensor_apply(self.by, coeffs[:, :, d], self.bx) for d in range(2)], axis=-1)

    def evaluate(self, coeffs: np.ndarray, gradient: bool = True) -> Tuple[LossBreakdown, Optional[np.ndarray]]:
        ncc_value, d_disp = self.ncc.evaluate(self.displacement(coeffs), gradient)
        reg_value, reg_grad = self.reg.evaluate(coeffs, gradient)
        weight = self.config.reg_weight
        breakdown = LossBreakdown(
            total=ncc_value + weight * reg_value,
            ncc_term=ncc_value,
            reg_term=reg_value,
            valid_pixel_count=self.ncc.count,
            reg_weight=weight
        )
        if not gradient:
            return breakdown, None
        ncc_grad = np.stack(
            [tensor_project(self.by, d_disp[:, :, d], self.bx) for d in range(2)], axis=-1
        )
        return breakdown, ncc_grad + weight * reg_grad


def ncc_loss(fixed: ScalarImage, moving: ScalarImage, bspline_field: BSplineField,
             config: Optional[OptimizerConfig] = None) -> float:
    """Negative mean windowed NCC between fixed and the field-warped moving image"""
    config = config or OptimizerConfig()
    term = _NccTerm(fixed, moving, config.ncc_window_radius, config.sample_stride)
    value, _ = term.evaluate(bspline_field.displacement_grid(fixed.shape), gradient=False)
    return value


def reg_loss(bspline_field: BSplineField, image_dims: Tuple[int, int], stride: int = 1) -> float:
    """Half the mean of s_x^2 |d_x u|^2 plus s_y^2 |d_y u|^2 over the pixel lattice.

    s_x and s_y are the image width and height, so the ramp u_x = x / N_x
    scores exactly 0.5.
    """
    value, _ = _RegTerm(bspline_field, image_dims, stride).evaluate(bspline_field.coeffs, gradient=False)
    return value


def loss_and_gradient(fixed: ScalarImage, moving: ScalarImage, bspline_field: BSplineField,
                      config: Optional[OptimizerConfig] = None) -> Tuple[LossBreakdown, np.ndarray]:
    """Loss breakdown and its gradient with respect to every control coefficient"""
    config = config or OptimizerConfig()
    objective = RegistrationObjective(fixed, moving, bspline_field, config)
    return objective.evaluate(bspline_field.coeffs, gradient=True)


def evaluate_loss(fixed: ScalarImage, moving: ScalarImage, bspline_field: BSplineField,
                  config: Optional[OptimizerConfig] = None) -> LossBreakdown:
    config = config or OptimizerConfig()
    breakdown, _ = RegistrationObjective(fixed, moving, bspline_field, config).evaluate(
        bspline_field.coeffs, gradient=False
    )
    return breakdown
