"""
Match files: the exchange format for correspondences produced by external matchers
"""

import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd

from ..core.errors import MatchFileError
from .matcher import Dims, MatchSet

logger = logging.getLogger(__name__)

COLUMNS = ["fixed_x", "fixed_y", "moving_x", "moving_y", "score"]
HEADER = "# " + ",".join(COLUMNS)


def match_file_name(fixed_id: str, moving_id: str, angle: float = None) -> str:
    """File name for a pair; per-angle files carry the sweep angle"""
    if angle is None:
        return f"{fixed_id}__{moving_id}.csv"
    return f"{fixed_id}__{moving_id}_rot{angle:g}.csv"


def _read_rows(path: Path) -> Tuple[List[int], List[List[str]]]:
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise MatchFileError(f"Cannot read match file {path}: {e}") from e

    lines = text.splitlines()
    if not lines or not any(line.strip() for line in lines):
        raise MatchFileError(f"Empty match file {path}")
    if lines[0].strip().replace(" ", "") != HEADER.replace(" ", ""):
        raise MatchFileError(f"Expected header '{HEADER}'", line=1)

    numbers, rows = [], []
    for offset, line in enumerate(lines[1:]):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != len(COLUMNS):
            raise MatchFileError(f"Expected {len(COLUMNS)} fields, found {len(fields)}", line=offset + 2)
        numbers.append(offset + 2)
        rows.append(fields)
    if not rows:
        raise MatchFileError(f"Empty match file {path}")
    return numbers, rows


def import_matches(path: Union[str, Path], fixed_dims: Dims, moving_dims: Dims) -> MatchSet:
    """Parse, bounds-check and deduplicate an external match file"""
    path = Path(path)
    numbers, rows = _read_rows(path)

    frame = pd.DataFrame(rows, columns=COLUMNS)
    values = frame.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    finite = np.isfinite(values.to_numpy(dtype=np.float64)).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise MatchFileError("Non-numeric or non-finite value", line=numbers[bad])

    fixed = values[["fixed_x", "fixed_y"]].to_numpy(dtype=np.float64)
    moving = values[["moving_x", "moving_y"]].to_numpy(dtype=np.float64)
    fw, fh = fixed_dims
    mw, mh = moving_dims
    for i, line in enumerate(numbers):
        if not (0.0 <= fixed[i, 0] < fw and 0.0 <= fixed[i, 1] < fh):
            raise MatchFileError(f"Fixed point ({fixed[i, 0]:g}, {fixed[i, 1]:g}) out of bounds", line=line)
        if not (0.0 <= moving[i, 0] < mw and 0.0 <= moving[i, 1] < mh):
            raise MatchFileError(f"Moving point ({moving[i, 0]:g}, {moving[i, 1]:g}) out of bounds", line=line)

    matches = MatchSet.build(fixed, moving, values["score"].to_numpy(dtype=np.float64), fixed_dims, moving_dims)
    if len(matches) < len(rows):
        logger.info(f"Dropped {len(rows) - len(matches)} duplicate matches from {path.name}")
    return matches


def export_matches(matches: MatchSet, path: Union[str, Path]) -> Path:
    """Write a match set in the match-file format"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        np.column_stack([matches.fixed_points, matches.moving_points, matches.scores]).reshape(-1, len(COLUMNS)),
        columns=COLUMNS
    )
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(HEADER + "\n")
        frame.to_csv(f, header=False, index=False, float_format="%.17g", lineterminator="\n")
    return path
