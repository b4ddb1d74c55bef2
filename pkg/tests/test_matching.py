import numpy as np
import pytest

from src.affine import invert
from src.core.errors import DegenerateContentError, MatchFileError, UnregistrableError
from src.imaging import ScalarImage
from src.matching import (
    HEADER,
    DetectorConfig,
    ImportedMatcher,
    Keypoint,
    MatcherConfig,
    BuiltinMatcher,
    detect_keypoints,
    export_matches,
    import_matches,
    match_descriptors,
    match_file_name,
    matcher_registry,
    parse_angles,
    rotate_image,
    rotation_sweep
)

from .helpers import textured_array

QUARTER_TURNS = [0.0, 90.0, 180.0, 270.0]


def _crop_pair(dx: int, dy: int, size: int = 128):
    """fixed(p) = moving(p + (dx, dy))"""
    big = textured_array((size + 40, size + 40), seed=8)
    fixed = ScalarImage(big[dy:dy + size, dx:dx + size])
    moving = ScalarImage(big[:size, :size])
    return fixed, moving


def _keypoint(x, y, descriptor):
    descriptor = np.asarray(descriptor, dtype=float)
    return Keypoint(x=x, y=y, response=1.0, descriptor=descriptor / np.linalg.norm(descriptor))


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_constant_image_is_degenerate():
    with pytest.raises(DegenerateContentError):
        detect_keypoints(ScalarImage(np.full((64, 64), 0.5)))
    with pytest.raises(DegenerateContentError):
        detect_keypoints(ScalarImage.from_array(textured_array((20, 64))))


def test_square_corners_are_detected():
    pixels = np.zeros((64, 64))
    pixels[16:48, 16:48] = 1.0
    keypoints = detect_keypoints(ScalarImage(pixels))
    found = np.array([[kp.x, kp.y] for kp in keypoints])
    for corner in [(15.5, 15.5), (47.5, 15.5), (15.5, 47.5), (47.5, 47.5)]:
        assert np.min(np.hypot(found[:, 0] - corner[0], found[:, 1] - corner[1])) <= 2.0


def test_detection_is_deterministic_and_normalized(textured_image):
    first = detect_keypoints(textured_image)
    second = detect_keypoints(textured_image)
    assert [(kp.x, kp.y) for kp in first] == [(kp.x, kp.y) for kp in second]
    for kp in first:
        assert kp.descriptor.shape == (256,)
        assert np.linalg.norm(kp.descriptor) == pytest.approx(1.0, abs=1e-6)
        assert 0 <= kp.x < textured_image.width and 0 <= kp.y < textured_image.height


def test_detection_respects_max_keypoints(textured_image):
    keypoints = detect_keypoints(textured_image, DetectorConfig(max_keypoints=10))
    assert len(keypoints) == 10
    responses = [kp.response for kp in keypoints]
    assert responses == sorted(responses, reverse=True)


def test_detection_is_translation_equivariant():
    config = DetectorConfig(pyramid_levels=1)
    fixed, moving = _crop_pair(5, 3)
    on_fixed = np.array([[kp.x, kp.y] for kp in detect_keypoints(fixed, config)])
    on_moving = np.array([[kp.x, kp.y] for kp in detect_keypoints(moving, config)])

    margin = 20
    interior = on_fixed[
        (on_fixed[:, 0] >= margin) & (on_fixed[:, 0] < 128 - margin)
        & (on_fixed[:, 1] >= margin) & (on_fixed[:, 1] < 128 - margin)
    ]
    assert len(interior) > 0
    for x, y in interior:
        assert np.min(np.hypot(on_moving[:, 0] - (x + 5), on_moving[:, 1] - (y + 3))) <= 1.0


def test_self_matching_scores_one(textured_image):
    keypoints = detect_keypoints(textured_image)
    matches = match_descriptors(keypoints, keypoints, fixed_dims=textured_image.dims,
                                moving_dims=textured_image.dims)
    assert len(matches) == len(keypoints)
    assert np.allclose(matches.scores, 1.0)
    assert np.array_equal(matches.fixed_points, matches.moving_points)


def test_orthogonal_descriptors_do_not_match():
    fixed = [_keypoint(1, 1, np.eye(4)[0]), _keypoint(2, 2, np.eye(4)[1])]
    moving = [_keypoint(1, 1, np.eye(4)[2]), _keypoint(2, 2, np.eye(4)[3])]
    assert len(match_descriptors(fixed, moving, fixed_dims=(8, 8), moving_dims=(8, 8))) == 0


def test_matching_is_symmetric():
    fixed, moving = _crop_pair(20, 11)
    a = detect_keypoints(fixed)
    b = detect_keypoints(moving)
    forward = match_descriptors(a, b, fixed_dims=fixed.dims, moving_dims=moving.dims)
    backward = match_descriptors(b, a, fixed_dims=moving.dims, moving_dims=fixed.dims).swapped()
    assert backward.fixed_dims == fixed.dims
    assert {pair[:2] for pair in forward.pairs} == {pair[:2] for pair in backward.pairs}


def test_translated_pair_matches_consistently():
    config = DetectorConfig(pyramid_levels=1)
    fixed, moving = _crop_pair(20, 11)
    matches = match_descriptors(detect_keypoints(fixed, config), detect_keypoints(moving, config),
                                fixed_dims=fixed.dims, moving_dims=moving.dims)
    assert len(matches) > 0
    offsets = matches.moving_points - matches.fixed_points
    consistent = np.hypot(offsets[:, 0] - 20, offsets[:, 1] - 11) <= 1.5
    assert consistent.mean() >= 0.8


def test_ratio_must_be_in_range():
    with pytest.raises(ValueError):
        match_descriptors([], [], ratio=0.0)


def test_import_valid_rows_and_duplicates(tmp_path):
    path = _write(tmp_path / "m.csv", [
        HEADER,
        "1,2,3,4,0.9",
        "5.5,6.5,7.5,8.5,0.8",
        "10,11,12,13,-0.1",
        "1,2,3,4,0.9"
    ])
    matches = import_matches(path, (64, 64), (64, 64))
    assert len(matches) == 3
    assert matches.pairs[1] == ((5.5, 6.5), (7.5, 8.5), 0.8)


def test_import_reports_offending_line(tmp_path):
    path = _write(tmp_path / "bounds.csv", [HEADER, "1,2,3,4,0.9", "64,2,3,4,0.9"])
    with pytest.raises(MatchFileError, match="line 3") as info:
        import_matches(path, (64, 64), (64, 64))
    assert info.value.line == 3

    path = _write(tmp_path / "text.csv", [HEADER, "1,2,x,4,0.9"])
    with pytest.raises(MatchFileError) as info:
        import_matches(path, (64, 64), (64, 64))
    assert info.value.line == 2

    path = _write(tmp_path / "short.csv", [HEADER, "1,2,3"])
    with pytest.raises(MatchFileError, match="line 2"):
        import_matches(path, (64, 64), (64, 64))


def test_import_rejects_bad_header_and_empty_file(tmp_path):
    with pytest.raises(MatchFileError, match="line 1"):
        import_matches(_write(tmp_path / "h.csv", ["x,y", "1,2,3,4,1"]), (64, 64), (64, 64))
    with pytest.raises(MatchFileError):
        import_matches(_write(tmp_path / "e.csv", [HEADER]), (64, 64), (64, 64))
    empty = tmp_path / "blank.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(MatchFileError):
        import_matches(empty, (64, 64), (64, 64))


def test_export_then_import(tmp_path, textured_image):
    keypoints = detect_keypoints(textured_image)
    matches = match_descriptors(keypoints, keypoints, fixed_dims=textured_image.dims,
                                moving_dims=textured_image.dims)
    path = export_matches(matches, tmp_path / match_file_name("a", "b"))
    assert path.name == "a__b.csv"
    assert path.read_text(encoding="utf-8").splitlines()[0] == HEADER
    again = import_matches(path, textured_image.dims, textured_image.dims)
    assert np.array_equal(again.fixed_points, matches.fixed_points)
    assert match_file_name("a", "b", 90.0) == "a__b_rot90.csv"
    assert match_file_name("a", "b", -15.0) == "a__b_rot-15.csv"


def test_rotate_image_quarter_turn_canvas():
    img = ScalarImage.from_array(textured_array((40, 60)))
    rotated, to_source = rotate_image(img, 90.0)
    assert rotated.dims == (40, 60)
    assert invert(to_source).determinant == pytest.approx(1.0)


def test_sweep_prefers_zero_for_identical_images(textured_image):
    result = rotation_sweep(textured_image, textured_image, QUARTER_TURNS)
    assert result.best_angle == 0.0
    assert set(result.per_angle_counts) == set(QUARTER_TURNS)


@pytest.mark.parametrize("seed", range(10))
def test_sweep_finds_quarter_turn(seed):
    fixed = ScalarImage.from_array(textured_array(seed=seed))
    moving, to_source = rotate_image(fixed, 90.0)
    result = rotation_sweep(fixed, moving, QUARTER_TURNS)

    counts = result.per_angle_counts
    assert result.best_angle == 90.0
    assert all(counts[90.0] > counts[a] for a in QUARTER_TURNS if a != 90.0)

    # matches come back in the unrotated moving frame
    expected = np.column_stack(invert(to_source).apply(
        result.best_matches.fixed_points[:, 0], result.best_matches.fixed_points[:, 1]
    ))
    error = np.hypot(*(expected - result.best_matches.moving_points).T)
    assert np.median(error) < 1.5
    assert np.all(result.best_matches.moving_points[:, 0] < moving.width)


def test_sweep_on_textureless_image_is_unregistrable(textured_image):
    blank = ScalarImage(np.full(textured_image.shape, 0.5))
    with pytest.raises(UnregistrableError) as info:
        rotation_sweep(textured_image, blank, QUARTER_TURNS)
    assert set(info.value.per_angle_counts) == set(QUARTER_TURNS)


def test_sweep_validates_angles(textured_image):
    with pytest.raises(ValueError):
        rotation_sweep(textured_image, textured_image, [90.0, 180.0])
    with pytest.raises(ValueError):
        rotation_sweep(textured_image, textured_image, [0.0, 90.0, 90.0])


def test_sweep_with_imported_matches(tmp_path, textured_image):
    rng = np.random.default_rng(0)
    fixed_points = rng.uniform(10, 80, size=(12, 2))
    rows = [HEADER] + [f"{x},{y},{x + 2},{y - 1},1" for x, y in fixed_points]
    _write(tmp_path / match_file_name("a", "b", 0.0), rows)

    matcher = matcher_registry.create("imported", matches_dir=tmp_path, fixed_id="a", moving_id="b")
    assert isinstance(matcher, ImportedMatcher)
    result = rotation_sweep(textured_image, textured_image, [0.0, 90.0], matcher=matcher)
    assert result.best_angle == 0.0
    assert result.per_angle_counts == {0.0: 12, 90.0: 0}


def test_registry_lists_builtin_and_imported():
    assert {"builtin", "imported"} <= set(matcher_registry.list_matchers())
    matcher = matcher_registry.create("builtin", config=MatcherConfig(ratio=0.8))
    assert isinstance(matcher, BuiltinMatcher)
    assert matcher.config.ratio == 0.8
    with pytest.raises(KeyError):
        matcher_registry.create("xfeat")


def test_parse_angles():
    assert parse_angles("0, 90,180,") == [0.0, 90.0, 180.0]
