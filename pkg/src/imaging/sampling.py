"""
Sub-pixel sampling, backward warping and block downsampling
"""

from typing import Tuple, Union

import numpy as np
from skimage.measure import block_reduce

from .image import ScalarImage
from .maps import CoordinateMap

ArrayLike = Union[float, np.ndarray]


def _bilinear(pixels: np.ndarray, x: np.ndarray, y: np.ndarray, fill: float, gradient: bool):
    h, w = pixels.shape
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    # NaN compares False, so it is treated as outside
    inside = (x >= 0.0) & (x <= w - 1) & (y >= 0.0) & (y <= h - 1)
    xc = np.where(inside, x, 0.0)
    yc = np.where(inside, y, 0.0)

    x0 = np.clip(np.floor(xc).astype(np.intp), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(yc).astype(np.intp), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0

    p00 = pixels[y0, x0]
    p01 = pixels[y0, x1]
    p10 = pixels[y1, x0]
    p11 = pixels[y1, x1]

    top = (1.0 - fx) * p00 + fx * p01
    bottom = (1.0 - fx) * p10 + fx * p11
    values = np.where(inside, (1.0 - fy) * top + fy * bottom, fill)

    if not gradient:
        return values

    gx = (1.0 - fy) * (p01 - p00) + fy * (p11 - p10)
    gy = bottom - top
    gx = np.where(inside, gx, 0.0)
    gy = np.where(inside, gy, 0.0)
    return values, gx, gy


def sample_bilinear(img: ScalarImage, x: ArrayLike, y: ArrayLike, fill: float = 0.0) -> ArrayLike:
    """Bilinear intensity at sub-pixel (x, y); `fill` outside [0, w-1] x [0, h-1]"""
    values = _bilinear(img.pixels, x, y, fill, gradient=False)
    if np.ndim(values) == 0:
        return float(values)
    return values


def sample_bilinear_with_gradient(
    img: ScalarImage, x: np.ndarray, y: np.ndarray, fill: float = 0.0
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bilinear samples together with their spatial derivatives d/dx, d/dy.

    The derivative is the limit of central differences of the bilinear
    interpolant, i.e. the slope of the bilinear patch the point lies in.
    Outside the image the derivative is zero.
    """
    return _bilinear(img.pixels, x, y, fill, gradient=True)


def pixel_grid(shape: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Float coordinate arrays (x, y) of an (height, width) lattice"""
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    return xs.astype(np.float64), ys.astype(np.float64)


def warp(
    moving: ScalarImage,
    coordinate_map: CoordinateMap,
    out_shape: Tuple[int, int],
    fill: float = 0.0
) -> ScalarImage:
    """Backward-map `moving` onto an (height, width) grid: out(p) = moving(map(p))"""
    xs, ys = pixel_grid(out_shape)
    mx, my = coordinate_map(xs, ys)
    values = _bilinear(moving.pixels, mx, my, fill, gradient=False)
    return ScalarImage.from_array(values)


def downsample(img: ScalarImage, factor: int) -> ScalarImage:
    """Block-mean downsampling; partial border blocks average their available pixels"""
    if factor < 1:
        raise ValueError(f"Downsample factor must be >= 1, got {factor}")
    if factor == 1:
        return img
    reduced = block_reduce(img.pixels, block_size=(factor, factor), func=np.nanmean, cval=np.nan)
    return ScalarImage.from_array(reduced)
