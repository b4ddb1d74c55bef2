import json
import math

import numpy as np
import pandas as pd
import pytest

from src.affine import AffineTransform2D
from src.core.errors import EvaluationError
from src.imaging import IdentityMap
from src.metrics import (
    REPORT_CSV,
    REPORT_JSON,
    LandmarkSet,
    PairEvaluation,
    aggregate,
    evaluate_pair,
    read_landmarks,
    rire,
    rtre,
    write_landmarks,
    write_report
)

DIMS = (300, 400)
IDS = ["a", "b", "c", "d"]


def _pair(median: float, robustness: float = 1.0, maximum: float = None, distance: float = 1.0) -> PairEvaluation:
    return PairEvaluation(
        pair=("f", "m"),
        rtre_per_landmark={"a": median},
        rire_per_landmark={"a": 1.0},
        distance_per_landmark={"a": distance},
        median_rtre=median,
        mean_rtre=median,
        max_rtre=maximum if maximum is not None else median,
        robustness=robustness,
        mean_distance=distance
    )


def test_rtre_examples():
    assert rtre((5, 5), (5, 5), DIMS) == 0.0
    assert rtre((3, 4), (0, 0), DIMS) == pytest.approx(0.01)
    assert rtre((7, 0), (0, 0), (100, 100)) == pytest.approx(7 / (100 * math.sqrt(2)))
    assert rire((3, 4), (0, 0), DIMS) == pytest.approx(0.01)


def test_rtre_is_invariant_under_rigid_motion():
    motion = AffineTransform2D.rotation(33.0, center=(10.0, 20.0))
    before = rtre((12.0, 9.0), (15.0, 13.0), DIMS)
    after = rtre(motion.apply_point((12.0, 9.0)), motion.apply_point((15.0, 13.0)), DIMS)
    assert after == pytest.approx(before, abs=1e-15)


def test_identity_on_identical_landmarks_never_improves():
    points = np.array([[10.0, 10.0], [50.0, 60.0], [100.0, 30.0], [200.0, 300.0]])
    landmarks = LandmarkSet("i", IDS, points)
    evaluation = evaluate_pair(landmarks, LandmarkSet("j", IDS, points), IdentityMap(), DIMS)
    assert set(evaluation.rtre_per_landmark.values()) == {0.0}
    assert evaluation.robustness == 0.0


def test_robustness_counts_strict_improvements():
    initial = np.array([[10.0, 10.0], [50.0, 60.0], [100.0, 30.0], [200.0, 300.0]])
    truth = initial + np.array([[10.0, 0.0], [10.0, 0.0], [10.0, 0.0], [0.0, 0.0]])
    evaluation = evaluate_pair(
        LandmarkSet("i", IDS, initial), LandmarkSet("j", IDS, truth),
        AffineTransform2D.translation(10, 0), DIMS
    )
    assert evaluation.robustness == 0.75
    assert evaluation.improved_count == 3
    assert evaluation.rtre_per_landmark["d"] == pytest.approx(10 / 500)


def test_pair_statistics_by_hand():
    truth = np.array([[10.0, 10.0], [50.0, 60.0], [100.0, 30.0], [200.0, 300.0]])
    initial = truth + np.array([[1.0, 0.0], [0.0, 2.0], [-3.0, 0.0], [0.0, -4.0]])
    evaluation = evaluate_pair(LandmarkSet("i", IDS, initial), LandmarkSet("j", IDS, truth),
                               IdentityMap(), DIMS)
    assert evaluation.median_rtre == pytest.approx(0.005)
    assert evaluation.max_rtre == pytest.approx(0.008)
    assert evaluation.mean_distance == pytest.approx(2.5)
    assert evaluation.summary(pixel_size_um=0.5)["mean_distance_um"] == pytest.approx(1.25)


def test_evaluate_uses_shared_ids_only():
    landmarks_i = LandmarkSet("i", ["a", "b", "x"], [[0, 0], [1, 1], [2, 2]])
    landmarks_j = LandmarkSet("j", ["b", "a", "y"], [[1, 1], [0, 3], [9, 9]])
    evaluation = evaluate_pair(landmarks_i, landmarks_j, IdentityMap(), DIMS)
    assert set(evaluation.rtre_per_landmark) == {"a", "b"}
    assert evaluation.distance_per_landmark["a"] == pytest.approx(3.0)

    with pytest.raises(EvaluationError):
        evaluate_pair(LandmarkSet("i", ["p"], [[0, 0]]), LandmarkSet("j", ["q"], [[0, 0]]), IdentityMap(), DIMS)


def test_aggregate_examples():
    report = aggregate([_pair(0.002), _pair(0.006), _pair(0.004)])
    assert report.amrtre == pytest.approx(0.004)
    assert report.mmrtre == pytest.approx(0.004)

    report = aggregate([_pair(0.01, robustness=1.0), _pair(0.02, robustness=0.5)])
    assert report.r_avg == 0.75

    single = _pair(0.003, robustness=0.25, maximum=0.009, distance=4.0)
    report = aggregate([single])
    assert (report.amrtre, report.mmrtre, report.amxrtre, report.r_avg, report.amean_d) == (
        0.003, 0.003, 0.009, 0.25, 4.0
    )

    with pytest.raises(EvaluationError):
        aggregate([])


def test_aggregate_is_permutation_invariant():
    pairs = [_pair(0.001 * k, robustness=0.1 * k, distance=float(k)) for k in range(1, 8)]
    forward = aggregate(pairs).to_dict()["aggregates"]
    backward = aggregate(list(reversed(pairs))).to_dict()["aggregates"]
    assert forward == backward


def test_distance_in_micrometers_is_exact():
    report = aggregate([_pair(0.01, distance=3.0), _pair(0.01, distance=5.0)], pixel_size_um=0.25)
    assert report.amean_d_um == report.amean_d * 0.25
    assert report.to_dict()["aggregates"]["AMean_D_um"] == 1.0


def test_landmark_files(tmp_path):
    landmarks = LandmarkSet("s1", ["L00_00", "L00_01"], [[1.25, 2.5], [3.0, 4.125]])
    path = write_landmarks(landmarks, tmp_path / "landmarks" / "s1.csv")
    loaded = read_landmarks(path)
    assert loaded.image_id == "s1"
    assert loaded.ids == ["L00_00", "L00_01"]
    assert np.array_equal(loaded.points, landmarks.points)

    bad = tmp_path / "bad.csv"
    bad.write_text("id,x\n1,2\n", encoding="utf-8")
    with pytest.raises(EvaluationError):
        read_landmarks(bad)


def test_landmark_set_validation():
    with pytest.raises(ValueError):
        LandmarkSet("s", ["a", "a"], [[0, 0], [1, 1]])
    with pytest.raises(ValueError):
        LandmarkSet("s", ["a"], [[0, 0], [1, 1]])


def test_report_files(tmp_path):
    truth = np.array([[10.0, 10.0], [50.0, 60.0]])
    evaluation = evaluate_pair(LandmarkSet("s0", ["a", "b"], truth + 3.0), LandmarkSet("s1", ["a", "b"], truth),
                               IdentityMap(), DIMS)
    paths = write_report(aggregate([evaluation]), tmp_path)
    assert paths["json"].name == REPORT_JSON
    assert paths["csv"].name == REPORT_CSV

    document = json.loads(paths["json"].read_text(encoding="utf-8"))
    assert set(document["aggregates"]) == {
        "AMrTRE", "MMrTRE", "AMean_rTRE", "AMxrTRE", "R_avg", "AMean_D_px", "AMean_D_um"
    }
    assert "definition inferred" in document["notes"]["AMean_rTRE"]

    frame = pd.read_csv(paths["csv"])
    assert frame.loc[0, "fixed_id"] == "s0"
    assert frame.loc[0, "landmarks"] == 2
