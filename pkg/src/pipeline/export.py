"""
Volume export: slices resampled into the reference frame, run manifest and per-pair files
"""

import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..affine import invert, load_transform, save_transform
from ..bspline import load_field, load_trace, save_field, save_trace
from ..config.settings import Settings
from ..core.models import PairRegistration, PairStatus, SequenceRegistration, SliceStatus, VolumeStack
from ..core.serialization import read_json, write_json
from ..imaging import ScalarImage, bake_map, save_image, warp
from ..synth import GroundTruth
from .sequence import chain_to_reference, compose_to_reference

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
TIMINGS = "timings.csv"
RAW_VOLUME = "volume.raw"
RAW_HEADER = "volume.mhd"


def pair_stem(pair: PairRegistration) -> str:
    return f"{pair.fixed_id}__{pair.moving_id}"


def _shape(seq: SequenceRegistration, slice_id: str) -> Tuple[int, int]:
    w, h = seq.slice_dims[slice_id]
    return h, w


def warp_to_reference(
    seq: SequenceRegistration,
    image: ScalarImage,
    slice_id: str,
    fill: float = 0.0,
    legacy_two_pass: bool = False
) -> ScalarImage:
    """Resample a slice onto the reference grid.

    The default composes every link into one map and resamples once. The
    legacy mode resamples per link: once for the affine, once for the field.
    """
    ref_shape = _shape(seq, seq.reference_id)
    if not legacy_two_pass:
        return warp(image, compose_to_reference(seq, slice_id), ref_shape, fill)

    compose_to_reference(seq, slice_id)  # raises for unplaced slices
    current = image
    for pair in reversed(chain_to_reference(seq, slice_id)):
        shape = _shape(seq, pair.fixed_id)
        current = warp(current, invert(pair.affine), shape, fill)
        if pair.deformation is not None:
            current = warp(current, pair.deformation, shape, fill)
    return current


def write_pair_files(pair: PairRegistration, out_dir: Union[str, Path], seed: int = 0) -> List[Path]:
    """Transform record, field and loss trace of one pair"""
    out_dir = Path(out_dir)
    stem = pair_stem(pair)
    written = [save_transform(
        out_dir / "transforms" / f"{stem}.json", pair.affine,
        rotation_deg=pair.rotation_deg, inlier_count=pair.inlier_count, seed=seed,
        fixed_id=pair.fixed_id, moving_id=pair.moving_id, status=pair.status.value
    )]
    if pair.deformation is not None:
        written.append(save_field(out_dir / "fields" / f"{stem}.json", pair.deformation,
                                  fixed_id=pair.fixed_id, moving_id=pair.moving_id))
    if pair.trace:
        written.append(save_trace(out_dir / "traces" / f"{stem}.csv", pair.trace))
    return written


def write_pair_results(seq: SequenceRegistration, out_dir: Union[str, Path], seed: int = 0) -> List[Path]:
    """Files of every pair, plus the separate timings table"""
    out_dir = Path(out_dir)
    written = []
    timings = []
    for pair in seq.pairs:
        written.extend(write_pair_files(pair, out_dir, seed))
        timings.extend(
            {"fixed_id": pair.fixed_id, "moving_id": pair.moving_id, "stage": stage, "seconds": seconds}
            for stage, seconds in pair.timings.items()
        )

    timings_path = out_dir / TIMINGS
    pd.DataFrame(timings, columns=["fixed_id", "moving_id", "stage", "seconds"]).to_csv(
        timings_path, index=False, lineterminator="\n"
    )
    written.append(timings_path)
    return written


def _write_raw_volume(stack: VolumeStack, out_dir: Path) -> Tuple[Path, Path]:
    """8-bit voxels, x fastest then y then z, with a MetaImage header"""
    voxels = np.stack([image.to_uint8() for image in stack.slices], axis=0)
    raw_path = out_dir / RAW_VOLUME
    voxels.tofile(raw_path)

    depth, height, width = stack.shape
    sx, sy, sz = stack.spacing
    header = "\n".join([
        "ObjectType = Image",
        "NDims = 3",
        "BinaryData = True",
        "BinaryDataByteOrderMSB = False",
        f"DimSize = {width} {height} {depth}",
        f"ElementSpacing = {sx:.17g} {sy:.17g} {sz:.17g}",
        f"ElementSpacingUnit = {stack.unit}",
        "ElementType = MET_UCHAR",
        f"ElementDataFile = {RAW_VOLUME}"
    ]) + "\n"
    header_path = out_dir / RAW_HEADER
    header_path.write_text(header, encoding="utf-8")
    return raw_path, header_path


def build_manifest(
    seq: SequenceRegistration,
    spacing: Tuple[float, float, float],
    unit: str,
    slice_files: Dict[str, str],
    cfg: Optional[Settings] = None,
    legacy_two_pass: bool = False
) -> Dict[str, Any]:
    """Run manifest; holds nothing that depends on timing or worker count"""
    return {
        "reference_id": seq.reference_id,
        "order": list(seq.slice_ids),
        "spacing": [float(s) for s in spacing],
        "unit": unit,
        "export_mode": "legacy-two-pass" if legacy_two_pass else "single-resample",
        "slices": [
            {
                "slice_id": sid,
                "status": seq.slice_status[sid].value,
                "width": seq.slice_dims[sid][0],
                "height": seq.slice_dims[sid][1],
                "file": slice_files.get(sid)
            }
            for sid in seq.slice_ids
        ],
        "breaks": [{"fixed_id": f, "moving_id": m} for f, m in seq.breaks],
        "pairs": [
            {
                "fixed_id": pair.fixed_id,
                "moving_id": pair.moving_id,
                "status": pair.status.value,
                "rotation_deg": pair.rotation_deg,
                "inlier_count": pair.inlier_count,
                "transform": f"transforms/{pair_stem(pair)}.json",
                "message": pair.message
            }
            for pair in seq.pairs
        ],
        "keypoint_pairs": {
            "before_rotation": sum(pair.baseline_match_count for pair in seq.pairs),
            "after_rotation": sum(pair.best_match_count for pair in seq.pairs)
        },
        "config": cfg.manifest_dict() if cfg is not None else {}
    }


def export_volume(
    seq: SequenceRegistration,
    slices: Sequence[ScalarImage],
    spacing: Optional[Tuple[float, float, float]] = None,
    out_dir: Union[str, Path] = "out",
    cfg: Optional[Settings] = None,
    legacy_two_pass: Optional[bool] = None,
    bake_fields: bool = False
) -> VolumeStack:
    """Warp every placed slice into the reference frame and write the volume files"""
    cfg = cfg or Settings()
    spacing = tuple(spacing or cfg.pipeline.spacing)
    legacy = cfg.pipeline.legacy_two_pass if legacy_two_pass is None else legacy_two_pass
    fill = cfg.imaging.fill_value
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    images = dict(zip(seq.slice_ids, slices))
    placed = [sid for sid in seq.slice_ids if seq.slice_status[sid] != SliceStatus.UNPLACED]
    if not placed:
        raise ValueError("No placed slices to export")

    warped: List[ScalarImage] = []
    slice_files: Dict[str, str] = {}
    ref_shape = _shape(seq, seq.reference_id)
    for k, sid in enumerate(placed):
        image = warp_to_reference(seq, images[sid], sid, fill, legacy)
        warped.append(image)
        if cfg.pipeline.save_images:
            name = f"slice_{k:04d}.png"
            save_image(image, out_dir / name)
            slice_files[sid] = name
        if bake_fields:
            _save_baked(out_dir, sid, seq, ref_shape)

    stack = VolumeStack(slices=warped, slice_ids=placed, spacing=spacing, unit=cfg.pipeline.spacing_unit)
    if cfg.pipeline.raw_volume:
        _write_raw_volume(stack, out_dir)

    write_pair_results(seq, out_dir, seed=cfg.ransac.seed)
    write_json(out_dir / MANIFEST, build_manifest(seq, spacing, stack.unit, slice_files, cfg, legacy))
    logger.info(f"Exported {len(placed)}/{len(seq.slice_ids)} slices to {out_dir}")
    return stack


def _save_baked(out_dir: Path, slice_id: str, seq: SequenceRegistration, shape: Tuple[int, int]) -> Path:
    """Dense (h, w, 2) slice-frame coordinates of every reference pixel"""
    path = out_dir / "baked" / f"{slice_id}.npy"
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, bake_map(compose_to_reference(seq, slice_id), shape))
    return path


def render_spots(points: np.ndarray, shape: Tuple[int, int], sigma: float = 2.0) -> ScalarImage:
    """Gaussian markers at the given (x, y) points"""
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    canvas = np.zeros(shape)
    for x, y in np.asarray(points, dtype=np.float64).reshape(-1, 2):
        canvas += np.exp(-((xs - x) ** 2 + (ys - y) ** 2) / (2.0 * sigma ** 2))
    return ScalarImage.from_array(canvas)


def localize_spots(image: ScalarImage, expected: np.ndarray, radius: int) -> np.ndarray:
    """Intensity centroid of the window around each expected position"""
    pixels = image.pixels
    h, w = pixels.shape
    found = []
    for x, y in np.asarray(expected, dtype=np.float64).reshape(-1, 2):
        x0, x1 = max(int(round(x)) - radius, 0), min(int(round(x)) + radius + 1, w)
        y0, y1 = max(int(round(y)) - radius, 0), min(int(round(y)) + radius + 1, h)
        window = pixels[y0:y1, x0:x1]
        total = window.sum()
        if x0 >= x1 or y0 >= y1 or total <= 0:
            found.append((math.nan, math.nan))
            continue
        wy, wx = np.mgrid[y0:y1, x0:x1]
        found.append(((window * wx).sum() / total, (window * wy).sum() / total))
    return np.array(found, dtype=np.float64)


def compare_export_modes(
    seq: SequenceRegistration,
    truth: GroundTruth,
    sigma: float = 2.0,
    fill: float = 0.0
) -> Dict[str, float]:
    """Mean landmark localisation error of single-resample vs two-resample export.

    Slice landmarks are rendered as Gaussian spots, exported both ways and
    localised by intensity centroid around the reference landmark.
    """
    reference = seq.reference_index
    radius = int(math.ceil(3 * sigma))
    errors: Dict[str, List[np.ndarray]] = {"single": [], "two_pass": []}
    for index, sid in enumerate(seq.slice_ids):
        if index == reference or seq.slice_status[sid] == SliceStatus.UNPLACED:
            continue
        expected = truth.landmarks[reference].select(truth.landmarks[index].ids)
        spots = render_spots(truth.landmarks[index].points, _shape(seq, sid), sigma)
        for mode, legacy in (("single", False), ("two_pass", True)):
            exported = warp_to_reference(seq, spots, sid, fill, legacy_two_pass=legacy)
            found = localize_spots(exported, expected, radius)
            errors[mode].append(np.hypot(found[:, 0] - expected[:, 0], found[:, 1] - expected[:, 1]))

    if not errors["single"]:
        raise ValueError("No placed slices to compare")
    result = {mode: float(np.nanmean(np.concatenate(values))) for mode, values in errors.items()}
    logger.info(f"Export comparison: single {result['single']:.4f} px, two-pass {result['two_pass']:.4f} px")
    return result


def load_run(run_dir: Union[str, Path]) -> SequenceRegistration:
    """Rebuild a sequence registration from an exported run directory"""
    run_dir = Path(run_dir)
    manifest_path = run_dir / MANIFEST
    if not manifest_path.is_file():
        raise FileNotFoundError(f"No {MANIFEST} in {run_dir}")
    manifest = read_json(manifest_path)

    pairs = []
    for entry in manifest["pairs"]:
        affine, record = load_transform(run_dir / entry["transform"])
        stem = f"{entry['fixed_id']}__{entry['moving_id']}"
        field_path = run_dir / "fields" / f"{stem}.json"
        trace_path = run_dir / "traces" / f"{stem}.csv"
        pairs.append(PairRegistration(
            fixed_id=entry["fixed_id"],
            moving_id=entry["moving_id"],
            status=PairStatus(entry["status"]),
            rotation_deg=float(record.get("rotation_deg", 0.0)),
            affine=affine,
            deformation=load_field(field_path) if field_path.is_file() else None,
            trace=load_trace(trace_path) if trace_path.is_file() else [],
            inlier_count=int(record.get("inlier_count", 0)),
            message=entry.get("message")
        ))

    order = list(manifest["order"])
    return SequenceRegistration(
        slice_ids=order,
        reference_index=order.index(manifest["reference_id"]),
        pairs=pairs,
        slice_status={s["slice_id"]: SliceStatus(s["status"]) for s in manifest["slices"]},
        slice_dims={s["slice_id"]: (int(s["width"]), int(s["height"])) for s in manifest["slices"]},
        breaks=[(b["fixed_id"], b["moving_id"]) for b in manifest["breaks"]]
    )
