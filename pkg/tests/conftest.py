"""
Shared fixtures for the Stratalign test suite
"""

import pytest

from src.config.settings import Settings
from src.imaging import ScalarImage
from src.synth import SynthConfig

from .helpers import textured_array


@pytest.fixture
def textured_image() -> ScalarImage:
    return ScalarImage.from_array(textured_array())


@pytest.fixture
def smooth_image() -> ScalarImage:
    """Low-frequency texture used for gradient checks"""
    return ScalarImage.from_array(textured_array((64, 64), seed=3, sigma=4.0))


@pytest.fixture
def small_synth_config() -> SynthConfig:
    return SynthConfig(
        seed=7,
        num_slices=3,
        dims=(96, 96),
        texture_scale=4,
        max_rotation_deg=3.0,
        max_translation=4.0,
        deform_amplitude=3.0,
        deform_spacing=32,
        noise_sigma=0.005,
        landmark_grid=4
    )


@pytest.fixture
def fast_settings() -> Settings:
    """Settings that keep full registrations quick"""
    return Settings({
        "matching_rotation_angles": "0,90,180,270",
        "bspline_max_iterations": "10",
        "bspline_grid_spacing": "32",
        "pipeline_workers": "1"
    })
