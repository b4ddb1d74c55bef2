"""
Sectioning artifacts: tears, folds and uneven illumination
"""

import numpy as np
from skimage.draw import line

from ..imaging import ScalarImage

TEAR_VERTICES = 4
FOLD_WIDTH = (6, 12)


def _draw_tears(pixels: np.ndarray, count: int, rng: np.random.Generator):
    h, w = pixels.shape
    bounds = np.linspace(0, w, count + 1).astype(int)
    for k in range(count):
        # one tear per vertical band, with a gap to the next band
        low, high = bounds[k] + 1, bounds[k + 1] - 2
        if high <= low:
            high = low
        ys = np.sort(rng.integers(0, h, size=TEAR_VERTICES))
        ys[0], ys[-1] = min(ys[0], h // 4), max(ys[-1], (3 * h) // 4)
        xs = rng.integers(low, high + 1, size=TEAR_VERTICES)
        for i in range(TEAR_VERTICES - 1):
            rr, cc = line(int(ys[i]), int(xs[i]), int(ys[i + 1]), int(xs[i + 1]))
            pixels[rr, cc] = 0.0


def _draw_folds(pixels: np.ndarray, count: int, rng: np.random.Generator):
    h, w = pixels.shape
    for _ in range(count):
        width = int(rng.integers(FOLD_WIDTH[0], FOLD_WIDTH[1] + 1))
        start = int(rng.integers(0, max(w - width, 1)))
        band = pixels[:, start:start + width]
        local_mean = band.mean()
        pixels[:, start:start + width] = local_mean + 2.0 * (band - local_mean)


def degrade(
    section: ScalarImage,
    tear_count: int = 0,
    fold_count: int = 0,
    illum_gradient: float = 0.0,
    seed: int = 0
) -> ScalarImage:
    """Apply seeded artifacts; with every knob at zero the input comes back unchanged"""
    if tear_count < 0 or fold_count < 0:
        raise ValueError("Artifact counts must be >= 0")
    if tear_count == 0 and fold_count == 0 and illum_gradient == 0.0:
        return section

    rng = np.random.default_rng(seed)
    pixels = np.array(section.pixels)
    h, w = pixels.shape

    _draw_folds(pixels, fold_count, rng)
    if illum_gradient != 0.0:
        ramp = 1.0 - illum_gradient / 2.0 + illum_gradient * np.arange(w) / max(w - 1, 1)
        pixels = pixels * ramp[None, :]
    pixels = np.clip(pixels, 0.0, 1.0)
    _draw_tears(pixels, tear_count, rng)
    return ScalarImage(pixels)
