"""
Coordinate maps: evaluable mappings from fixed-frame to moving-frame coordinates
"""

from typing import Iterable, Protocol, Tuple, runtime_checkable

import numpy as np


@runtime_checkable
class CoordinateMap(Protocol):
    """Maps fixed-frame (x, y) arrays to moving-frame (x', y') arrays"""

    def __call__(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ...


class IdentityMap:
    """The identity coordinate map"""

    def __call__(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.array(x, dtype=np.float64, copy=True), np.array(y, dtype=np.float64, copy=True)

    def __repr__(self) -> str:
        return "IdentityMap()"


class MapChain:
    """Finite composition of maps, applied in list order (links[0] first)"""

    def __init__(self, links: Iterable[CoordinateMap]):
        flat = []
        for link in links:
            if isinstance(link, MapChain):
                flat.extend(link.links)
            elif isinstance(link, IdentityMap):
                continue
            else:
                flat.append(link)
        self.links: Tuple[CoordinateMap, ...] = tuple(flat)

    def __call__(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if not self.links:
            return x.copy(), y.copy()
        for link in self.links:
            x, y = link(x, y)
        return x, y

    def __len__(self) -> int:
        return len(self.links)

    def __repr__(self) -> str:
        return f"MapChain({len(self.links)} links)"


def map_points(coordinate_map: CoordinateMap, points: np.ndarray) -> np.ndarray:
    """Apply a map to an (N, 2) array of (x, y) points"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    mx, my = coordinate_map(points[:, 0], points[:, 1])
    return np.column_stack([mx, my])


def bake_map(coordinate_map: CoordinateMap, shape: Tuple[int, int]) -> np.ndarray:
    """Evaluate a map on the dense (height, width) lattice, returning (h, w, 2) coordinates"""
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    mx, my = coordinate_map(xs, ys)
    return np.stack([mx, my], axis=-1)
