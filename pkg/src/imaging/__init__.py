"""
Stratalign Imaging Package

Image representation, raster I/O, sub-pixel sampling, warping and coordinate maps.
"""

from .image import ChannelPolicy, ScalarImage, load_image, save_image
from .maps import CoordinateMap, IdentityMap, MapChain, bake_map, map_points
from .sampling import (
    downsample,
    pixel_grid,
    sample_bilinear,
    sample_bilinear_with_gradient,
    warp
)

__all__ = [
    # Images
    "ChannelPolicy",
    "ScalarImage",
    "load_image",
    "save_image",

    # Maps
    "CoordinateMap",
    "IdentityMap",
    "MapChain",
    "bake_map",
    "map_points",

    # Sampling
    "downsample",
    "pixel_grid",
    "sample_bilinear",
    "sample_bilinear_with_gradient",
    "warp"
]
