"""
Pydantic models for API requests and responses
"""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field

from ..core.models import JobStatus


# Request Models
class CreateJobRequest(BaseModel):
    """Request to register a server-side slice directory"""
    input_dir: str = Field(description="Directory of PNG/TIFF slices, registered in file-name order")
    out_dir: str = Field(description="Directory for the exported volume and per-pair files")
    overrides: Dict[str, Any] = Field(default_factory=dict, description="Configuration key overrides")
    landmark_dir: Optional[str] = Field(default=None, description="Landmark CSVs to evaluate against")
    evaluation_mode: Literal["consecutive", "reference"] = "consecutive"


# Response Models
class PairSummary(BaseModel):
    """Outcome of one pair registration"""
    fixed_id: str
    moving_id: str
    status: str
    rotation_deg: float = 0.0
    inlier_count: int = 0
    message: Optional[str] = None


class JobResponse(BaseModel):
    """Job status and, once finished, its results"""
    job_id: str
    status: JobStatus
    input_dir: str
    out_dir: str
    created_at: Optional[str] = None
    updated_at: Optional[str] = None
    reference_id: Optional[str] = None
    placed: List[str] = Field(default_factory=list)
    breaks: List[List[str]] = Field(default_factory=list)
    pairs: List[PairSummary] = Field(default_factory=list)
    metrics: Optional[Dict[str, Any]] = None
    error: Optional[str] = None


class ErrorResponse(BaseModel):
    """Error response"""
    error: str
    detail: Optional[str] = None
    job_id: Optional[str] = None


class HealthResponse(BaseModel):
    """Health check response"""
    status: str
    timestamp: str
    version: str
    available_stages: List[str]
    available_matchers: List[str]
