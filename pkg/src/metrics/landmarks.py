"""
Landmark sets and their CSV files
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..core.errors import EvaluationError
from ..imaging.maps import CoordinateMap, map_points

LANDMARK_COLUMNS = ["landmark_id", "x", "y"]


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """Ordered landmarks (id, x, y) of one image; ids are unique"""
    image_id: str
    ids: List[str]
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        ids = [str(i) for i in self.ids]
        points = np.array(self.points, dtype=np.float64).reshape(-1, 2)
        if len(ids) != len(points):
            raise ValueError("Landmark ids and points differ in length")
        if len(set(ids)) != len(ids):
            raise ValueError(f"Duplicate landmark ids in {self.image_id}")
        if not np.all(np.isfinite(points)):
            raise ValueError(f"Non-finite landmark coordinates in {self.image_id}")
        points.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.ids)

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {lid: self.points[i] for i, lid in enumerate(self.ids)}

    def select(self, ids: Sequence[str]) -> np.ndarray:
        """(len(ids), 2) coordinates in the order given"""
        index = {lid: i for i, lid in enumerate(self.ids)}
        return self.points[[index[lid] for lid in ids]].reshape(-1, 2)

    def mapped(self, coordinate_map: CoordinateMap, image_id: Optional[str] = None) -> "LandmarkSet":
        """Landmarks pushed through a coordinate map"""
        return LandmarkSet(image_id=image_id or self.image_id, ids=list(self.ids),
                           points=map_points(coordinate_map, self.points))


def read_landmarks(path: Union[str, Path], image_id: Optional[str] = None) -> LandmarkSet:
    """Read a `landmark_id,x,y` CSV"""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={"landmark_id": str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise EvaluationError(f"Cannot read landmarks {path}: {e}") from e
    missing = [c for c in LANDMARK_COLUMNS if c not in frame.columns]
    if missing:
        raise EvaluationError(f"Landmark file {path} lacks columns {missing}")
    return LandmarkSet(
        image_id=image_id or path.stem,
        ids=frame["landmark_id"].astype(str).tolist(),
        points=frame[["x", "y"]].to_numpy(dtype=np.float64)
    )


def write_landmarks(landmarks: LandmarkSet, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({
        "landmark_id": landmarks.ids,
        "x": landmarks.points[:, 0],
        "y": landmarks.points[:, 1]
    })
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path
