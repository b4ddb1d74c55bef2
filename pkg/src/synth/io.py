"""
Writing synthetic sequences to disk
"""

import logging
from pathlib import Path
from typing import Dict, List, Union

from ..affine.io import save_transform
from ..bspline.io import save_field
from ..core.serialization import write_json
from ..imaging import ScalarImage, save_image
from ..metrics.landmarks import write_landmarks
from .generator import GroundTruth, SynthConfig, slice_id

logger = logging.getLogger(__name__)

SYNTH_MANIFEST = "synth_manifest.json"


def write_sequence(
    slices: List[ScalarImage],
    truth: GroundTruth,
    cfg: SynthConfig,
    out_dir: Union[str, Path],
    degradation: Dict[str, float] = None
) -> Path:
    """Slices as PNG, landmarks as CSV, truth transforms as JSON, plus a manifest"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for index, image in enumerate(slices):
        name = slice_id(index)
        save_image(image, out_dir / f"{name}.png")
        write_landmarks(truth.landmarks[index], out_dir / "landmarks" / f"{name}.csv")
        save_transform(
            out_dir / "truth" / f"{name}_affine.json", truth.affines[index],
            slice_id=name, direction="reference_to_slice"
        )
        save_field(out_dir / "truth" / f"{name}_field.json", truth.fields[index], slice_id=name)
        entries.append({"slice_id": name, "image": f"{name}.png", "landmarks": f"landmarks/{name}.csv"})

    manifest = {
        "generator": "stratalign.synth",
        "config": cfg.to_dict(),
        "degradation": dict(degradation or {}),
        "truth_map": "p -> A(p + u(p)), reference frame to slice frame",
        "slices": entries
    }
    path = write_json(out_dir / SYNTH_MANIFEST, manifest)
    logger.info(f"Wrote {len(slices)} synthetic slices to {out_dir}")
    return path
