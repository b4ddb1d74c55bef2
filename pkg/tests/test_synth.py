import json
from dataclasses import replace

import numpy as np
import pytest
from skimage.measure import label

from src.affine import load_transform
from src.bspline import load_field
from src.core.errors import SynthConfigError
from src.imaging import ScalarImage, map_points
from src.metrics import evaluate_pair, read_landmarks
from src.synth import SYNTH_MANIFEST, SynthConfig, degrade, generate_sequence, slice_id, write_sequence


def _still_config(**changes) -> SynthConfig:
    values = dict(
        seed=3, num_slices=3, dims=(64, 64), max_rotation_deg=0.0, max_translation=0.0,
        max_log_scale=0.0, deform_amplitude=0.0, noise_sigma=0.0, structural_drift=0.0,
        landmark_grid=3
    )
    values.update(changes)
    return SynthConfig(**values)


def test_same_seed_is_bit_identical(small_synth_config):
    slices_a, truth_a = generate_sequence(small_synth_config)
    slices_b, truth_b = generate_sequence(small_synth_config)
    for a, b in zip(slices_a, slices_b):
        assert np.array_equal(a.pixels, b.pixels)
    for a, b in zip(truth_a.landmarks, truth_b.landmarks):
        assert a.ids == b.ids
        assert np.array_equal(a.points, b.points)

    slices_c, _ = generate_sequence(replace(small_synth_config, seed=8))
    assert not np.array_equal(slices_a[1].pixels, slices_c[1].pixels)


def test_degenerate_config_gives_identical_slices():
    slices, truth = generate_sequence(_still_config())
    for image in slices[1:]:
        assert np.array_equal(image.pixels, slices[0].pixels)
    reference = truth.landmarks[0].points
    for t in range(3):
        assert np.array_equal(map_points(truth.maps[t], reference), reference)
        assert np.array_equal(truth.landmarks[t].points, reference)


def test_slice_ids_and_landmark_grid(small_synth_config):
    slices, truth = generate_sequence(small_synth_config)
    assert len(slices) == 3
    assert slices[0].dims == (96, 96)
    assert slice_id(2) == "slice_002"
    assert truth.landmarks[2].image_id == "slice_002"
    assert truth.landmarks[0].ids[:2] == ["L00_00", "L00_01"]
    assert len(truth.landmarks[0]) == 16


def test_truth_maps_are_exact(small_synth_config):
    slices, truth = generate_sequence(small_synth_config)
    for t in range(1, len(slices)):
        evaluation = evaluate_pair(truth.landmarks[0], truth.landmarks[t], truth.maps[t], slices[t].dims)
        assert evaluation.max_rtre < 1e-9


def test_truth_maps_invert_numerically(small_synth_config):
    _, truth = generate_sequence(small_synth_config)
    reference = truth.landmarks[0].points
    for t in range(1, small_synth_config.num_slices):
        back = truth.inverse_points(t, truth.landmarks[t].points)
        assert np.max(np.hypot(*(back - reference).T)) < 0.05


def test_consecutive_displacement_tracks_configured_jitter():
    ratios = []
    for seed in (0, 1):
        cfg = SynthConfig(seed=seed, num_slices=10, dims=(128, 128), deform_spacing=64, landmark_grid=6)
        _, truth = generate_sequence(cfg)
        steps = [
            np.hypot(*(truth.landmarks[t + 1].points - truth.landmarks[t].points).T).mean()
            for t in range(cfg.num_slices - 1)
        ]
        ratios.append(np.mean(steps) / cfg.jitter_magnitude)
    assert 0.3 <= np.mean(ratios) <= 1.5


def test_jitter_affines_respect_configured_bounds(small_synth_config):
    _, truth = generate_sequence(small_synth_config)
    max_rotation, max_translation, max_log_scale = small_synth_config.affine_jitter
    assert (max_rotation, max_translation) == (3.0, 4.0)

    center = np.array([47.5, 47.5])
    for affine in truth.affines[1:]:
        matrix = affine.to_matrix()
        assert abs(np.degrees(np.arctan2(matrix[1, 0], matrix[0, 0]))) <= max_rotation
        assert abs(0.5 * np.log(affine.determinant)) <= max_log_scale + 1e-12
        shift = np.array(affine.apply_point(center)) - center
        assert np.all(np.abs(shift) <= max_translation + 1e-9)


def test_config_preconditions():
    with pytest.raises(SynthConfigError):
        generate_sequence(_still_config(num_slices=1))
    with pytest.raises(SynthConfigError):
        generate_sequence(_still_config(deform_amplitude=20.0, deform_spacing=32.0))
    with pytest.raises(SynthConfigError):
        generate_sequence(_still_config(dims=(16, 64)))


def test_tissue_mask_darkens_corners():
    slices, _ = generate_sequence(_still_config(tissue_mask=True))
    assert slices[0].value_at(0, 0) < slices[0].value_at(32, 32)


def test_degrade_with_no_artifacts_is_identity():
    section = ScalarImage(np.full((64, 64), 0.5))
    assert degrade(section) is section
    assert degrade(section, 0, 0, 0.0, seed=9) is section


def test_degrade_illumination_ramp():
    section = ScalarImage(np.full((64, 96), 0.5))
    lit = degrade(section, illum_gradient=0.2)
    ratio = lit.pixels[:, 0].mean() / lit.pixels[:, -1].mean()
    assert ratio == pytest.approx(0.9 / 1.1, rel=0.05)


def test_degrade_draws_separate_tears():
    section = ScalarImage(np.full((96, 96), 0.5))
    torn = degrade(section, tear_count=3, seed=4)
    damage = (section.pixels - torn.pixels) > 0.25
    assert label(damage, connectivity=2).max() == 3


def test_degrade_is_deterministic_per_seed():
    section = ScalarImage(np.linspace(0.1, 0.9, 64 * 64).reshape(64, 64))
    a = degrade(section, tear_count=2, fold_count=1, illum_gradient=0.1, seed=5)
    b = degrade(section, tear_count=2, fold_count=1, illum_gradient=0.1, seed=5)
    assert np.array_equal(a.pixels, b.pixels)
    with pytest.raises(ValueError):
        degrade(section, tear_count=-1)


def test_write_sequence(tmp_path, small_synth_config):
    slices, truth = generate_sequence(small_synth_config)
    manifest_path = write_sequence(slices, truth, small_synth_config, tmp_path, {"tears": 0})
    assert manifest_path.name == SYNTH_MANIFEST

    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    assert manifest["config"]["dims"] == [96, 96]
    assert [entry["slice_id"] for entry in manifest["slices"]] == ["slice_000", "slice_001", "slice_002"]

    for index in range(3):
        name = slice_id(index)
        assert (tmp_path / f"{name}.png").is_file()
        landmarks = read_landmarks(tmp_path / "landmarks" / f"{name}.csv")
        assert np.array_equal(landmarks.points, truth.landmarks[index].points)

    affine, record = load_transform(tmp_path / "truth" / "slice_001_affine.json")
    assert affine == truth.affines[1]
    assert record["direction"] == "reference_to_slice"
    assert np.array_equal(load_field(tmp_path / "truth" / "slice_001_field.json").coeffs, truth.fields[1].coeffs)
