"""
2D affine transform algebra
"""

import math
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from ..core.errors import SingularTransformError

SINGULAR_TOLERANCE = 1e-12
DET_SANITY_BAND = (1e-3, 1e3)

PointLike = Union[Tuple[float, float], np.ndarray]


@dataclass(frozen=True)
class AffineTransform2D:
    """x' = A x + t with A = [[a11, a12], [a21, a22]] and t = (tx, ty)"""
    a11: float = 1.0
    a12: float = 0.0
    a21: float = 0.0
    a22: float = 1.0
    tx: float = 0.0
    ty: float = 0.0

    def __post_init__(self):
        for name in ("a11", "a12", "a21", "a22", "tx", "ty"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"Affine entry {name} is not finite")
            object.__setattr__(self, name, value)

    @classmethod
    def identity(cls) -> "AffineTransform2D":
        return cls()

    @classmethod
    def translation(cls, tx: float, ty: float) -> "AffineTransform2D":
        return cls(tx=tx, ty=ty)

    @classmethod
    def scaling(cls, sx: float, sy: float = None) -> "AffineTransform2D":
        return cls(a11=sx, a22=sx if sy is None else sy)

    @classmethod
    def rotation(
        cls,
        angle_deg: float,
        center: Tuple[float, float] = (0.0, 0.0),
        target_center: Tuple[float, float] = None
    ) -> "AffineTransform2D":
        """Rotation by `angle_deg` about `center`, which lands on `target_center`"""
        theta = math.radians(angle_deg)
        c, s = math.cos(theta), math.sin(theta)
        cx, cy = center
        ux, uy = target_center if target_center is not None else center
        return cls(
            a11=c, a12=-s, a21=s, a22=c,
            tx=ux - (c * cx - s * cy),
            ty=uy - (s * cx + c * cy)
        )

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "AffineTransform2D":
        """Build from a 2x3 or 3x3 homogeneous matrix"""
        m = np.asarray(matrix, dtype=np.float64)
        return cls(a11=m[0, 0], a12=m[0, 1], a21=m[1, 0], a22=m[1, 1], tx=m[0, 2], ty=m[1, 2])

    def to_matrix(self) -> np.ndarray:
        """3x3 homogeneous matrix"""
        return np.array([
            [self.a11, self.a12, self.tx],
            [self.a21, self.a22, self.ty],
            [0.0, 0.0, 1.0]
        ])

    @property
    def determinant(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def is_sane(self) -> bool:
        """Whether |det| lies in the sanity band accepted for registrations"""
        low, high = DET_SANITY_BAND
        return low <= abs(self.determinant) <= high

    def apply(self, x, y):
        """Apply to scalar or array coordinates"""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return self.a11 * x + self.a12 * y + self.tx, self.a21 * x + self.a22 * y + self.ty

    def __call__(self, x, y):
        return self.apply(x, y)

    def apply_point(self, p: PointLike) -> Tuple[float, float]:
        x, y = self.apply(p[0], p[1])
        return float(x), float(y)

    def as_dict(self) -> Dict[str, float]:
        return {
            "a11": self.a11, "a12": self.a12, "a21": self.a21, "a22": self.a22,
            "tx": self.tx, "ty": self.ty
        }


def apply(transform: AffineTransform2D, p: PointLike) -> Tuple[float, float]:
    """x' = a11 x + a12 y + tx, y' = a21 x + a22 y + ty"""
    return transform.apply_point(p)


def compose(t2: AffineTransform2D, t1: AffineTransform2D) -> AffineTransform2D:
    """Transform applying t1 first, then t2"""
    return AffineTransform2D(
        a11=t2.a11 * t1.a11 + t2.a12 * t1.a21,
        a12=t2.a11 * t1.a12 + t2.a12 * t1.a22,
        a21=t2.a21 * t1.a11 + t2.a22 * t1.a21,
        a22=t2.a21 * t1.a12 + t2.a22 * t1.a22,
        tx=t2.a11 * t1.tx + t2.a12 * t1.ty + t2.tx,
        ty=t2.a21 * t1.tx + t2.a22 * t1.ty + t2.ty
    )


def invert(transform: AffineTransform2D) -> AffineTransform2D:
    """Exact inverse: A^-1 and t' = -A^-1 t"""
    det = transform.determinant
    if abs(det) <= SINGULAR_TOLERANCE:
        raise SingularTransformError(f"Cannot invert affine with determinant {det:.3e}")
    i11 = transform.a22 / det
    i12 = -transform.a12 / det
    i21 = -transform.a21 / det
    i22 = transform.a11 / det
    return AffineTransform2D(
        a11=i11, a12=i12, a21=i21, a22=i22,
        tx=-(i11 * transform.tx + i12 * transform.ty),
        ty=-(i21 * transform.tx + i22 * transform.ty)
    )
