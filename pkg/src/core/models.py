"""
Core models for Stratalign registration runs
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

if TYPE_CHECKING:
    from ..affine.transform import AffineTransform2D
    from ..bspline.field import BSplineField
    from ..bspline.optimizer import TraceEntry
    from ..imaging.image import ScalarImage
    from ..imaging.maps import CoordinateMap


class PairStatus(str, Enum):
    """Outcome of registering one pair"""
    OK = "ok"
    AFFINE_ONLY = "affine-only"
    UNREGISTRABLE = "unregistrable"


class SliceStatus(str, Enum):
    """Placement of a slice in the reference frame"""
    REFERENCE = "reference"
    PLACED = "placed"
    UNPLACED = "unplaced"


class StageStatus(str, Enum):
    """Stage execution status"""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    SKIPPED = "skipped"
    FAILED = "failed"


class JobStatus(str, Enum):
    """Job execution status"""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    PARTIAL = "partial"
    FAILED = "failed"
    CANCELLED = "cancelled"


@dataclass
class StageResult:
    """Result from stage execution"""
    stage_id: str
    status: StageStatus
    execution_time: float = 0.0
    error: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class PairRegistration:
    """Everything needed to map the fixed frame of a pair into its moving frame.

    `affine` is in the moving -> fixed direction with the sweep rotation folded
    in; `deformation` displaces fixed-frame points into the affine-prewarped
    moving frame.
    """
    fixed_id: str
    moving_id: str
    status: PairStatus
    rotation_deg: float = 0.0
    affine: Optional["AffineTransform2D"] = None
    deformation: Optional["BSplineField"] = None
    trace: List["TraceEntry"] = field(default_factory=list)
    inlier_count: int = 0
    per_angle_counts: Dict[float, int] = field(default_factory=dict)
    baseline_match_count: int = 0
    best_match_count: int = 0
    initial_ncc: Optional[float] = None
    final_ncc: Optional[float] = None
    message: Optional[str] = None
    timings: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.status == PairStatus.OK and (self.deformation is None or self.affine is None):
            raise ValueError("A pair with status ok needs both an affine and a deformation")
        if self.status == PairStatus.AFFINE_ONLY and (self.deformation is not None or self.affine is None):
            raise ValueError("An affine-only pair carries an affine and no deformation")

    @property
    def registered(self) -> bool:
        return self.status != PairStatus.UNREGISTRABLE

    def pair_map(self) -> "CoordinateMap":
        """fixed -> moving map: deformation first, then the inverse affine"""
        from ..affine.transform import invert
        from ..imaging.maps import MapChain

        if not self.registered:
            raise ValueError(f"Pair {self.fixed_id} -> {self.moving_id} is unregistrable")
        links = [] if self.deformation is None else [self.deformation]
        links.append(invert(self.affine))
        return MapChain(links)


@dataclass
class SequenceRegistration:
    """Pairwise results of a sequence and the slices' placement in the reference frame"""
    slice_ids: List[str]
    reference_index: int
    pairs: List[PairRegistration]
    slice_status: Dict[str, SliceStatus]
    slice_dims: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    breaks: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def reference_id(self) -> str:
        return self.slice_ids[self.reference_index]

    @property
    def placed_ids(self) -> List[str]:
        return [sid for sid in self.slice_ids if self.slice_status[sid] != SliceStatus.UNPLACED]

    @property
    def partial(self) -> bool:
        return bool(self.breaks)

    def pair_for(self, moving_id: str) -> Optional[PairRegistration]:
        """The pair that registers `moving_id` onto its neighbour toward the reference"""
        for pair in self.pairs:
            if pair.moving_id == moving_id:
                return pair
        return None


@dataclass
class VolumeStack:
    """Slices resampled onto the reference grid with a physical voxel spacing"""
    slices: List["ScalarImage"]
    slice_ids: List[str]
    spacing: Tuple[float, float, float] = (1.0, 1.0, 8.0)
    unit: str = "mm"

    def __post_init__(self):
        if not self.slices:
            raise ValueError("A volume needs at least one slice")
        shapes = {s.shape for s in self.slices}
        if len(shapes) != 1:
            raise ValueError(f"Volume slices differ in shape: {sorted(shapes)}")
        if min(self.spacing) <= 0:
            raise ValueError("Volume spacing must be positive")

    @property
    def shape(self) -> Tuple[int, int, int]:
        """(depth, height, width)"""
        h, w = self.slices[0].shape
        return len(self.slices), h, w


class PairState(BaseModel):
    """Shared state threaded through the stages of one pair registration"""
    pair_index: int
    fixed_id: str
    moving_id: str
    fixed: Any
    moving: Any
    external_matches: Any = None
    sweep: Any = None
    per_angle_counts: Dict[float, int] = Field(default_factory=dict)
    matches: Any = None
    affine: Any = None
    inlier_count: int = 0
    rotation_deg: float = 0.0
    deformation: Any = None
    trace: List[Any] = Field(default_factory=list)
    initial_ncc: Optional[float] = None
    final_ncc: Optional[float] = None
    status: PairStatus = PairStatus.OK
    message: Optional[str] = None
    stage_results: Dict[str, Any] = Field(default_factory=dict)
    timings: Dict[str, float] = Field(default_factory=dict)

    model_config = ConfigDict(arbitrary_types_allowed=True)
