"""
Field files and loss-trace CSVs
"""

from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np
import pandas as pd

from ..core.serialization import read_json, write_json
from .field import BSplineField
from .optimizer import TraceEntry

TRACE_COLUMNS = ["iteration", "total", "ncc", "reg", "alpha_used"]


def field_record(bspline_field: BSplineField) -> Dict[str, Any]:
    """Structured-text form; coefficients row-major over (y, x), dx before dy"""
    return {
        "degree": bspline_field.degree,
        "nx": bspline_field.nx,
        "ny": bspline_field.ny,
        "spacing": list(bspline_field.spacing),
        "origin": list(bspline_field.origin),
        "width": bspline_field.image_dims[0],
        "height": bspline_field.image_dims[1],
        "coefficients": bspline_field.coeffs.reshape(-1).tolist()
    }


def field_from_record(record: Dict[str, Any]) -> BSplineField:
    coeffs = np.asarray(record["coefficients"], dtype=np.float64).reshape(record["ny"], record["nx"], 2)
    return BSplineField(
        coeffs=coeffs,
        spacing=tuple(record["spacing"]),
        origin=tuple(record["origin"]),
        image_dims=(record["width"], record["height"]),
        degree=record.get("degree", 3)
    )


def save_field(path: Union[str, Path], bspline_field: BSplineField, **extra: Any) -> Path:
    record = dict(extra)
    record.update(field_record(bspline_field))
    return write_json(path, record)


def load_field(path: Union[str, Path]) -> BSplineField:
    return field_from_record(read_json(path))


def trace_frame(trace: List[TraceEntry]) -> pd.DataFrame:
    return pd.DataFrame(
        [[e.iteration, e.total, e.ncc, e.reg, e.alpha_used] for e in trace],
        columns=TRACE_COLUMNS
    )


def save_trace(path: Union[str, Path], trace: List[TraceEntry]) -> Path:
    """Write `iteration,total,ncc,reg,alpha_used` rows"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(trace).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def load_trace(path: Union[str, Path]) -> List[TraceEntry]:
    frame = pd.read_csv(path)
    return [
        TraceEntry(int(row.iteration), float(row.total), float(row.ncc), float(row.reg), float(row.alpha_used))
        for row in frame.itertuples(index=False)
    ]
