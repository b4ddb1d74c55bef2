"""
Test image builders
"""

import numpy as np
from scipy.ndimage import gaussian_filter


def textured_array(shape=(96, 96), seed=0, sigma=2.0) -> np.ndarray:
    """Smoothed noise stretched into [0.05, 0.95]"""
    rng = np.random.default_rng(seed)
    field = gaussian_filter(rng.random(shape), sigma)
    field = (field - field.min()) / (field.max() - field.min())
    return 0.05 + 0.9 * field
