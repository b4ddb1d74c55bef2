"""
Landmark evaluation of a registered sequence
"""

import logging
from pathlib import Path
from typing import Dict, List, Literal, Union

from ..core.errors import EvaluationError
from ..core.models import PairStatus, SequenceRegistration, SliceStatus
from ..imaging import CoordinateMap, IdentityMap
from ..metrics import (
    DEFAULT_PIXEL_SIZE_UM,
    LandmarkSet,
    MetricsReport,
    PairEvaluation,
    aggregate,
    evaluate_pair,
    read_landmarks
)
from .sequence import compose_to_reference

logger = logging.getLogger(__name__)

EvaluationMode = Literal["consecutive", "reference"]


def load_landmark_dir(landmark_dir: Union[str, Path], slice_ids: List[str]) -> Dict[str, LandmarkSet]:
    """`{slice_id}.csv` files that exist for the given slices"""
    landmark_dir = Path(landmark_dir)
    found = {}
    for sid in slice_ids:
        path = landmark_dir / f"{sid}.csv"
        if path.is_file():
            found[sid] = read_landmarks(path, image_id=sid)
    return found


def _evaluate(
    landmarks: Dict[str, LandmarkSet],
    source_id: str,
    target_id: str,
    coordinate_map: CoordinateMap,
    seq: SequenceRegistration
) -> PairEvaluation:
    return evaluate_pair(landmarks[source_id], landmarks[target_id], coordinate_map, seq.slice_dims[target_id])


def evaluate_run(
    seq: SequenceRegistration,
    landmark_dir: Union[str, Path],
    pixel_size_um: float = DEFAULT_PIXEL_SIZE_UM,
    mode: EvaluationMode = "consecutive"
) -> MetricsReport:
    """Aggregate landmark metrics over the sequence.

    `consecutive` maps each pair's fixed landmarks through the pair's fixed ->
    moving map. `reference` maps the reference landmarks through each slice's
    composed map. Pairs or slices without a map are scored with the identity.
    """
    landmarks = load_landmark_dir(landmark_dir, seq.slice_ids)
    evaluations: List[PairEvaluation] = []

    if mode == "consecutive":
        for pair in seq.pairs:
            if pair.fixed_id not in landmarks or pair.moving_id not in landmarks:
                continue
            if pair.status == PairStatus.UNREGISTRABLE:
                logger.warning(f"Scoring unregistrable pair {pair.fixed_id} <- {pair.moving_id} with the identity")
                coordinate_map: CoordinateMap = IdentityMap()
            else:
                coordinate_map = pair.pair_map()
            evaluations.append(_evaluate(landmarks, pair.fixed_id, pair.moving_id, coordinate_map, seq))
    elif mode == "reference":
        ref = seq.reference_id
        if ref in landmarks:
            for sid in seq.slice_ids:
                if sid == ref or sid not in landmarks:
                    continue
                if seq.slice_status[sid] == SliceStatus.UNPLACED:
                    coordinate_map = IdentityMap()
                else:
                    coordinate_map = compose_to_reference(seq, sid)
                evaluations.append(_evaluate(landmarks, ref, sid, coordinate_map, seq))
    else:
        raise ValueError(f"Unknown evaluation mode: {mode}")

    if not evaluations:
        raise EvaluationError(f"No evaluable pairs with landmarks in {landmark_dir}")
    return aggregate(evaluations, pixel_size_um)
