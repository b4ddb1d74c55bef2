"""
Sequence registration: consecutive pairs chained into one reference frame
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from ..config.settings import Settings
from ..core.errors import ImageIOError, UnplacedSliceError
from ..core.models import PairStatus, SequenceRegistration, SliceStatus
from ..core.orchestrator import PairJob
from ..imaging import CoordinateMap, IdentityMap, MapChain, ScalarImage, downsample, load_image
from ..matching import MatchSet, import_matches, match_file_name
from .register import build_orchestrator

logger = logging.getLogger(__name__)


def reference_index(count: int, policy: str = "first") -> int:
    """Index of the reference slice: the first, or the median index"""
    if policy == "first":
        return 0
    if policy == "middle":
        return (count - 1) // 2
    raise ValueError(f"Unknown reference policy: {policy}")


def chain_pairs(count: int, reference: int) -> List[Tuple[int, int]]:
    """(fixed, moving) index pairs; the fixed slice is always the neighbour nearer the reference"""
    pairs = [(i + 1, i) for i in range(reference - 1, -1, -1)]
    pairs += [(i - 1, i) for i in range(reference + 1, count)]
    return pairs


def _external_matches(
    matches_dir: Optional[str], fixed_id: str, moving_id: str, fixed: ScalarImage, moving: ScalarImage
) -> Optional[MatchSet]:
    """A rotation-resolved match file, if one exists for this pair"""
    if not matches_dir:
        return None
    path = Path(matches_dir) / match_file_name(fixed_id, moving_id)
    if not path.is_file():
        return None
    logger.info(f"Using external matches {path.name}")
    return import_matches(path, fixed.dims, moving.dims)


def register_sequence(
    slices: Sequence[ScalarImage],
    cfg: Optional[Settings] = None,
    slice_ids: Optional[Sequence[str]] = None,
    reference: Optional[str] = None,
    workers: Optional[int] = None,
    export_matches_dir: Optional[str] = None
) -> SequenceRegistration:
    """Register every consecutive pair and place slices relative to the reference.

    An unregistrable pair breaks the chain: the slices beyond it keep their
    pairwise results but are flagged unplaced.
    """
    cfg = cfg or Settings()
    if len(slices) < 2:
        raise ValueError("A sequence needs at least 2 slices")
    ids = list(slice_ids) if slice_ids is not None else [f"slice_{i:03d}" for i in range(len(slices))]
    if len(ids) != len(slices) or len(set(ids)) != len(ids):
        raise ValueError("Slice ids must be unique and match the slices")

    ref = reference_index(len(slices), reference or cfg.pipeline.reference)
    registration_config = replace(cfg.registration_config(), export_matches_dir=export_matches_dir)
    orchestrator = build_orchestrator(registration_config, workers or cfg.pipeline.workers)

    jobs = []
    for index, (f, m) in enumerate(chain_pairs(len(slices), ref)):
        jobs.append(PairJob(
            pair_index=index,
            fixed_id=ids[f],
            moving_id=ids[m],
            fixed=slices[f],
            moving=slices[m],
            external_matches=_external_matches(
                registration_config.matches_dir, ids[f], ids[m], slices[f], slices[m]
            )
        ))

    logger.info(f"Registering {len(jobs)} pairs with reference {ids[ref]}")
    pairs = orchestrator.run(jobs)

    by_moving = {pair.moving_id: pair for pair in pairs}
    status: Dict[str, SliceStatus] = {ids[ref]: SliceStatus.REFERENCE}
    breaks: List[Tuple[str, str]] = []
    for direction in (range(ref - 1, -1, -1), range(ref + 1, len(ids))):
        broken = False
        for i in direction:
            pair = by_moving[ids[i]]
            if pair.status == PairStatus.UNREGISTRABLE:
                breaks.append((pair.fixed_id, pair.moving_id))
                if not broken:
                    logger.warning(f"Chain break at {pair.fixed_id} <- {pair.moving_id}")
                broken = True
            status[ids[i]] = SliceStatus.UNPLACED if broken else SliceStatus.PLACED

    return SequenceRegistration(
        slice_ids=ids,
        reference_index=ref,
        pairs=pairs,
        slice_status={sid: status[sid] for sid in ids},
        slice_dims={sid: image.dims for sid, image in zip(ids, slices)},
        breaks=breaks
    )


def chain_to_reference(seq: SequenceRegistration, slice_id: str) -> List:
    """Pairs from the reference out to `slice_id`, nearest the reference first"""
    if slice_id not in seq.slice_status:
        raise KeyError(f"Unknown slice: {slice_id}")
    chain = []
    current = slice_id
    while current != seq.reference_id:
        pair = seq.pair_for(current)
        chain.insert(0, pair)
        current = pair.fixed_id
    return chain


def compose_to_reference(seq: SequenceRegistration, slice_id: str) -> CoordinateMap:
    """Reference-frame -> slice-frame map, composed lazily from the pairwise maps"""
    if slice_id == seq.reference_id:
        return IdentityMap()
    if seq.slice_status[slice_id] == SliceStatus.UNPLACED:
        raise UnplacedSliceError(f"Slice {slice_id} lies beyond a chain break")
    return MapChain([pair.pair_map() for pair in chain_to_reference(seq, slice_id)])


def load_sequence(
    directory: Union[str, Path], downsample_factor: int = 1, channel_policy: str = "luminance"
) -> Tuple[List[ScalarImage], List[str]]:
    """Every PNG/TIFF in a directory, in file-name order, keyed by file stem"""
    directory = Path(directory)
    if not directory.is_dir():
        raise ImageIOError(f"Slice directory not found: {directory}")
    paths = sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in (".png", ".tif", ".tiff")
    )
    slices = [downsample(load_image(p, channel_policy), downsample_factor) for p in paths]
    return slices, [p.stem for p in paths]
