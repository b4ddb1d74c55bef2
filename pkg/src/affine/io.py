"""
Transform files: one structured-text record per image pair
"""

from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from ..core.serialization import read_json, write_json
from .transform import AffineTransform2D

DIRECTION = "moving_to_fixed"


def transform_record(
    transform: Optional[AffineTransform2D],
    rotation_deg: float = 0.0,
    inlier_count: int = 0,
    seed: int = 0,
    direction: str = DIRECTION,
    **extra: Any
) -> Dict[str, Any]:
    """Record for a pair transform; entries are null when no affine was accepted"""
    record: Dict[str, Any] = dict(extra)
    record["direction"] = direction
    entries = transform.as_dict() if transform is not None else dict.fromkeys(
        ("a11", "a12", "a21", "a22", "tx", "ty")
    )
    record.update(entries)
    record["rotation_deg"] = float(rotation_deg)
    record["inlier_count"] = int(inlier_count)
    record["seed"] = int(seed)
    return record


def save_transform(path: Union[str, Path], transform: Optional[AffineTransform2D], **fields: Any) -> Path:
    """Write a transform record; keyword fields are passed to `transform_record`"""
    return write_json(path, transform_record(transform, **fields))


def load_transform(path: Union[str, Path]) -> Tuple[Optional[AffineTransform2D], Dict[str, Any]]:
    """Read a transform record back as (transform or None, full record)"""
    record = read_json(path)
    if record.get("a11") is None:
        return None, record
    transform = AffineTransform2D(**{k: record[k] for k in ("a11", "a12", "a21", "a22", "tx", "ty")})
    return transform, record
