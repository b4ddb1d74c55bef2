import json

import numpy as np
import pytest

from src.affine import AffineTransform2D, invert
from src.bspline import BSplineField, OptimizerConfig, optimize
from src.config.settings import Settings
from src.core.errors import EvaluationError, UnplacedSliceError
from src.core.models import PairRegistration, PairStatus, SequenceRegistration, SliceStatus
from src.imaging import IdentityMap, ScalarImage, map_points, warp
from src.metrics import LandmarkSet, write_landmarks, write_report
from src.pipeline.charts import plot_landmarks, plot_loss_trace, plot_metrics
from src.pipeline.evaluate import evaluate_run
from src.pipeline.export import (
    MANIFEST,
    RAW_HEADER,
    RAW_VOLUME,
    TIMINGS,
    compare_export_modes,
    export_volume,
    load_run
)
from src.pipeline.register import register_pair
from src.pipeline.sequence import chain_pairs, compose_to_reference, reference_index, register_sequence
from src.synth import SynthConfig, generate_sequence

from .helpers import textured_array

IDS = ["s0", "s1", "s2"]
POINTS = np.array([[10.0, 12.0], [30.0, 40.0], [50.0, 20.0], [20.0, 55.0]])
LANDMARK_IDS = ["a", "b", "c", "d"]


def _affine_only(fixed_id: str, moving_id: str, dx: float) -> PairRegistration:
    # moving -> fixed affine; the pair map sends fixed points to p - dx
    return PairRegistration(
        fixed_id=fixed_id, moving_id=moving_id, status=PairStatus.AFFINE_ONLY,
        affine=AffineTransform2D.translation(dx, 0.0), inlier_count=10
    )


def _translation_chain(first: float = -3.0, second: float = -4.0, broken: bool = False) -> SequenceRegistration:
    pairs = [_affine_only("s0", "s1", first)]
    if broken:
        pairs.append(PairRegistration(fixed_id="s1", moving_id="s2", status=PairStatus.UNREGISTRABLE))
    else:
        pairs.append(_affine_only("s1", "s2", second))
    return SequenceRegistration(
        slice_ids=list(IDS),
        reference_index=0,
        pairs=pairs,
        slice_status={
            "s0": SliceStatus.REFERENCE,
            "s1": SliceStatus.PLACED,
            "s2": SliceStatus.UNPLACED if broken else SliceStatus.PLACED
        },
        slice_dims={sid: (64, 64) for sid in IDS},
        breaks=[("s1", "s2")] if broken else []
    )


def _slices():
    return [ScalarImage.from_array(textured_array((64, 64), seed=i, sigma=3.0)) for i in range(3)]


def _write_landmark_dir(directory, offsets):
    for sid, offset in zip(IDS, offsets):
        write_landmarks(LandmarkSet(sid, LANDMARK_IDS, POINTS + np.array(offset)), directory / f"{sid}.csv")
    return directory


def test_reference_index_and_chain_pairs():
    assert reference_index(5, "first") == 0
    assert reference_index(5, "middle") == 2
    assert reference_index(4, "middle") == 1
    with pytest.raises(ValueError):
        reference_index(4, "last")

    assert chain_pairs(4, 0) == [(0, 1), (1, 2), (2, 3)]
    assert chain_pairs(5, 2) == [(2, 1), (1, 0), (2, 3), (3, 4)]


def test_register_identical_pair_is_near_identity(textured_image, fast_settings):
    pair = register_pair(textured_image, textured_image, fast_settings, fixed_id="a", moving_id="b")
    assert pair.status != PairStatus.UNREGISTRABLE
    assert pair.rotation_deg == 0.0

    points = np.array([[20.0, 20.0], [48.0, 48.0], [70.0, 30.0], [90.0, 90.0]])
    through_affine = np.column_stack(pair.affine.apply(points[:, 0], points[:, 1]))
    assert np.max(np.hypot(*(through_affine - points).T)) < 1e-3
    assert pair.trace
    assert min(entry.total for entry in pair.trace) <= -0.99
    assert pair.final_ncc <= -0.99

    moved = map_points(pair.pair_map(), points)
    assert np.max(np.hypot(*(moved - points).T)) < 1e-2


def test_register_pair_recovers_quarter_turn_and_shift(fast_settings):
    fixed = ScalarImage.from_array(textured_array((128, 128), seed=4))
    # fixed -> moving: quarter turn about the center, then (10, -6)
    truth = AffineTransform2D.rotation(90.0, center=(63.5, 63.5), target_center=(73.5, 57.5))
    moving = warp(fixed, invert(truth), fixed.shape, fill=0.5)

    pair = register_pair(fixed, moving, fast_settings, fixed_id="a", moving_id="b")
    assert pair.registered
    assert pair.rotation_deg == 90.0

    points = np.array([[40.0, 40.0], [64.0, 64.0], [90.0, 50.0], [50.0, 90.0], [80.0, 75.0]])
    expected = np.column_stack(truth.apply(points[:, 0], points[:, 1]))
    moved = map_points(pair.pair_map(), points)
    assert np.max(np.hypot(*(moved - expected).T)) < 0.5


def test_compose_to_reference_chains_translations():
    seq = _translation_chain()
    assert isinstance(compose_to_reference(seq, "s0"), IdentityMap)

    adjacent = map_points(compose_to_reference(seq, "s1"), np.array([[5.0, 5.0]]))
    assert np.allclose(adjacent, [[8.0, 5.0]])

    far = map_points(compose_to_reference(seq, "s2"), np.array([[5.0, 5.0], [0.0, 10.0]]))
    assert np.allclose(far, [[12.0, 5.0], [7.0, 10.0]])


def test_unplaced_slice_has_no_composed_map():
    seq = _translation_chain(broken=True)
    assert seq.placed_ids == ["s0", "s1"]
    with pytest.raises(UnplacedSliceError):
        compose_to_reference(seq, "s2")


def test_textureless_slice_breaks_the_chain(textured_image, fast_settings):
    blank = ScalarImage(np.full(textured_image.shape, 0.5))
    seq = register_sequence([textured_image, textured_image, blank], cfg=fast_settings)

    assert seq.reference_id == "slice_000"
    assert seq.pairs[1].status == PairStatus.UNREGISTRABLE
    assert seq.breaks == [("slice_001", "slice_002")]
    assert seq.slice_status["slice_002"] == SliceStatus.UNPLACED
    assert seq.slice_status["slice_001"] == SliceStatus.PLACED
    assert seq.partial


def test_register_sequence_needs_two_slices(textured_image):
    with pytest.raises(ValueError):
        register_sequence([textured_image])


def test_export_volume_files(tmp_path):
    seq = _translation_chain()
    stack = export_volume(seq, _slices(), out_dir=tmp_path)

    assert stack.shape == (3, 64, 64)
    assert (tmp_path / RAW_VOLUME).stat().st_size == 64 * 64 * 3
    assert "DimSize = 64 64 3" in (tmp_path / RAW_HEADER).read_text(encoding="utf-8")
    assert (tmp_path / "slice_0000.png").is_file()
    assert (tmp_path / TIMINGS).is_file()

    manifest = json.loads((tmp_path / MANIFEST).read_text(encoding="utf-8"))
    assert manifest["spacing"] == [1.0, 1.0, 8.0]
    assert manifest["order"] == IDS
    assert manifest["export_mode"] == "single-resample"
    assert [pair["status"] for pair in manifest["pairs"]] == ["affine-only", "affine-only"]


def test_export_skips_unplaced_slices(tmp_path):
    stack = export_volume(_translation_chain(broken=True), _slices(), out_dir=tmp_path)
    assert stack.slice_ids == ["s0", "s1"]
    assert (tmp_path / RAW_VOLUME).stat().st_size == 64 * 64 * 2


def test_load_run_restores_the_chain(tmp_path):
    export_volume(_translation_chain(), _slices(), out_dir=tmp_path)
    seq = load_run(tmp_path)
    assert seq.reference_id == "s0"
    assert seq.pairs[0].affine == AffineTransform2D.translation(-3.0, 0.0)
    far = map_points(compose_to_reference(seq, "s2"), np.array([[5.0, 5.0]]))
    assert np.allclose(far, [[12.0, 5.0]])

    with pytest.raises(FileNotFoundError):
        load_run(tmp_path / "missing")


def test_evaluate_identity_run(tmp_path):
    landmark_dir = _write_landmark_dir(tmp_path, [(0, 0), (0, 0), (0, 0)])
    seq = _translation_chain(first=0.0, second=0.0)
    report = evaluate_run(seq, landmark_dir)
    assert report.r_avg == 0.0
    assert report.amrtre == 0.0


def test_evaluate_exact_translations(tmp_path):
    landmark_dir = _write_landmark_dir(tmp_path, [(0, 0), (3, 0), (7, 0)])
    seq = _translation_chain()

    consecutive = evaluate_run(seq, landmark_dir)
    assert consecutive.amrtre == pytest.approx(0.0, abs=1e-12)
    assert consecutive.r_avg == 1.0

    reference = evaluate_run(seq, landmark_dir, mode="reference")
    assert len(reference.pairs) == 2
    assert reference.amxrtre == pytest.approx(0.0, abs=1e-12)


def test_evaluate_scores_unregistrable_pairs_with_identity(tmp_path):
    landmark_dir = _write_landmark_dir(tmp_path, [(0, 0), (3, 0), (7, 0)])
    report = evaluate_run(_translation_chain(broken=True), landmark_dir)
    assert len(report.pairs) == 2
    assert report.pairs[1].robustness == 0.0
    assert report.pairs[1].median_rtre == pytest.approx(4.0 / (64 * np.sqrt(2)))


def test_evaluate_errors(tmp_path):
    with pytest.raises(EvaluationError):
        evaluate_run(_translation_chain(), tmp_path)
    with pytest.raises(ValueError):
        evaluate_run(_translation_chain(), _write_landmark_dir(tmp_path, [(0, 0)] * 3), mode="pairs")


def _identity_baseline(seq: SequenceRegistration) -> SequenceRegistration:
    """The same chain with every pair scored as unregistered"""
    return SequenceRegistration(
        slice_ids=seq.slice_ids,
        reference_index=seq.reference_index,
        pairs=[PairRegistration(p.fixed_id, p.moving_id, PairStatus.UNREGISTRABLE) for p in seq.pairs],
        slice_status=dict(seq.slice_status),
        slice_dims=dict(seq.slice_dims)
    )


def _write_truth_landmarks(truth, directory):
    for landmarks in truth.landmarks:
        write_landmarks(landmarks, directory / f"{landmarks.image_id}.csv")
    return directory


@pytest.fixture(scope="module")
def default_sequence_run(tmp_path_factory):
    """Default 10-slice 256x256 synthetic sequence registered with default settings on 8 workers"""
    root = tmp_path_factory.mktemp("default_sequence")
    slices, truth = generate_sequence(SynthConfig(seed=0))
    landmark_dir = _write_truth_landmarks(truth, root / "landmarks")
    settings = Settings()
    seq = register_sequence(slices, cfg=settings, workers=8)
    return slices, truth, seq, settings, landmark_dir


@pytest.mark.slow
def test_synthetic_sequence_end_to_end(tmp_path, small_synth_config, fast_settings):
    slices, truth = generate_sequence(small_synth_config)
    landmark_dir = _write_truth_landmarks(truth, tmp_path / "landmarks")

    seq = register_sequence(slices, cfg=fast_settings)
    assert not seq.breaks
    assert all(pair.registered for pair in seq.pairs)

    stack = export_volume(seq, slices, out_dir=tmp_path / "run", cfg=fast_settings)
    assert stack.shape == (3, 96, 96)

    registered = evaluate_run(seq, landmark_dir)
    baseline = evaluate_run(_identity_baseline(seq), landmark_dir)
    assert registered.amrtre < baseline.amrtre
    assert registered.r_avg > 0.5


@pytest.mark.slow
def test_default_sequence_recovers_most_of_the_misalignment(default_sequence_run):
    slices, _, seq, _, landmark_dir = default_sequence_run
    assert len(slices) == 10
    assert slices[0].dims == (256, 256)
    assert not seq.breaks
    assert all(pair.registered for pair in seq.pairs)

    registered = evaluate_run(seq, landmark_dir)
    baseline = evaluate_run(_identity_baseline(seq), landmark_dir)
    assert registered.amean_rtre <= 0.2 * baseline.amean_rtre
    assert registered.r_avg >= 0.9


@pytest.mark.slow
def test_exports_are_byte_identical_across_worker_counts(default_sequence_run, tmp_path):
    slices, _, parallel, settings, landmark_dir = default_sequence_run
    serial = register_sequence(slices, cfg=settings, workers=1)

    runs = []
    for name, seq in (("serial", serial), ("parallel", parallel)):
        out = tmp_path / name
        export_volume(seq, slices, out_dir=out, cfg=settings)
        write_report(evaluate_run(seq, landmark_dir), out)
        runs.append(out)

    # timings.csv holds wall-clock seconds and is the one file allowed to differ
    listings = [
        sorted(str(p.relative_to(run)) for p in run.rglob("*") if p.is_file() and p.name != TIMINGS)
        for run in runs
    ]
    assert listings[0] == listings[1]
    assert MANIFEST in listings[0]
    assert "metrics.json" in listings[0] and "metrics_pairs.csv" in listings[0]
    assert sum(name.startswith("transforms") for name in listings[0]) == 9
    for name in listings[0]:
        assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes(), name


@pytest.mark.slow
def test_single_resample_export_is_not_worse(default_sequence_run):
    _, truth, seq, _, _ = default_sequence_run
    errors = compare_export_modes(seq, truth)
    assert errors["single"] <= errors["two_pass"]


def test_charts(tmp_path, textured_image):
    moving = ScalarImage(np.roll(textured_image.pixels, 2, axis=1))
    config = OptimizerConfig(grid_spacing=32, max_iterations=3)
    _, trace = optimize(textured_image, moving, BSplineField.zeros(textured_image.dims, 32), config)
    assert plot_loss_trace(trace, tmp_path / "trace.png").is_file()

    mapped = POINTS + 0.5
    path = plot_landmarks(POINTS, POINTS + 1.0, mapped, textured_image, tmp_path / "charts" / "landmarks.png")
    assert path.is_file()

    landmark_dir = _write_landmark_dir(tmp_path, [(0, 0), (3, 0), (7, 0)])
    report = evaluate_run(_translation_chain(broken=True), landmark_dir)
    assert plot_metrics(report, tmp_path / "metrics.png").is_file()
